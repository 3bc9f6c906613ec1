//! Tempered coordinate-ascent variational Bayes.
//!
//! A sweep updates the responsibilities, then the weight factor, then every
//! component factor in index order. Each step is the exact maximizer of the
//! surrogate objective in its block, so the recorded trace never decreases.

use serde::{Deserialize, Serialize};

use crate::divergence::{DirichletParams, GaussianParams, InverseGammaParams, McEstimate, NigParams};
use crate::error::{Error, Result};
use crate::mixture::{draw_dirichlet, log_likelihood, log_sum_exp, ComponentFamily, Dataset};
use crate::parallel::map_indexed;
use crate::prior::{
    expected_log_weight, kl_state_to_prior, ComponentFactor, ComponentPrior, FactorMoments, PriorSpec,
    VariationalState,
};
use crate::rng::{derive_seed, seeded, SeededRng};

/// How the responsibilities are seeded before the first sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Each row drawn from a flat Dirichlet.
    RandomResponsibilities,
    /// Hard assignment after a few Lloyd steps from centers drawn one per
    /// quantile stratum. Falls back to random rows for categorical data.
    KMeansLike,
    /// Posterior-style responsibilities under component parameters drawn from
    /// the prior, with equal weights.
    PriorDraw,
    /// Caller-supplied n × K matrix.
    Given(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub alpha: f64,
    pub rel_tol: f64,
    pub max_sweeps: usize,
    pub restarts: usize,
    pub seed: u64,
    pub init: Init,
    pub threads: usize,
    /// Re-evaluate the objective after every block update and fail with an
    /// invariant error if it drops by more than the relative slack.
    pub check_monotone: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            rel_tol: 1e-8,
            max_sweeps: 500,
            restarts: 1,
            seed: 0,
            init: Init::RandomResponsibilities,
            threads: 1,
            check_monotone: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::Config(format!("relative tolerance must be positive, got {}", self.rel_tol)));
        }
        if self.restarts == 0 {
            return Err(Error::Config("at least one restart is required".into()));
        }
        Ok(())
    }
}

/// Relative slack allowed when checking that the objective does not decrease.
pub const MONOTONE_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub state: VariationalState,
    /// Surrogate objective after initialization, then after every sweep.
    pub elbo_trace: Vec<f64>,
    #[serde(rename = "L_K_surrogate")]
    pub surrogate_elbo: f64,
    #[serde(rename = "L_K_mc", default, skip_serializing_if = "Option::is_none")]
    pub exact_elbo_mc: Option<McEstimate>,
    pub sweeps: usize,
    pub converged: bool,
    /// Index of the winning restart.
    pub restart: usize,
    /// Final surrogate objective of every restart.
    pub restart_elbos: Vec<f64>,
    pub weight_prior_warning: bool,
}

fn factor_moments(state: &VariationalState, family: ComponentFamily) -> Result<Vec<FactorMoments>> {
    state.component_factors.iter().map(|f| FactorMoments::new(f, family)).collect()
}

fn weight_terms(state: &VariationalState) -> Result<Vec<f64>> {
    (0..state.k()).map(|j| expected_log_weight(&state.weight_factor, j)).collect()
}

fn check_shapes(state: &VariationalState, data: &Dataset, prior: &PriorSpec) -> Result<()> {
    if state.k() != prior.k() || state.weight_factor.dim() != prior.k() {
        return Err(Error::Shape(format!("state has K = {} but prior K = {}", state.k(), prior.k())));
    }
    if state.responsibilities.len() != data.len() {
        return Err(Error::Shape(format!(
            "{} responsibility rows for {} observations",
            state.responsibilities.len(),
            data.len()
        )));
    }
    Ok(())
}

/// `ω_j^i ∝ exp(E log p_j + E log q_{θ_j}(X_i))`, normalized per row.
pub fn update_responsibilities(state: &mut VariationalState, data: &Dataset, family: ComponentFamily) -> Result<()> {
    if state.responsibilities.len() != data.len() {
        return Err(Error::Shape("responsibility rows do not match the data".into()));
    }
    let moments = factor_moments(state, family)?;
    let elw = weight_terms(state)?;
    let k = state.k();
    let mut logits = vec![0.0; k];
    for (i, x) in data.iter().enumerate() {
        for j in 0..k {
            logits[j] = elw[j] + moments[j].expected_log_density(x)?;
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::DegenerateObservation { row: i });
        }
        let row = &mut state.responsibilities[i];
        let mut total = 0.0;
        for j in 0..k {
            row[j] = (logits[j] - max).exp();
            total += row[j];
        }
        for w in row.iter_mut() {
            *w /= total;
        }
    }
    Ok(())
}

/// Column sums `Σ_i ω_j^i`.
fn column_mass(state: &VariationalState) -> Vec<f64> {
    let mut mass = vec![0.0; state.k()];
    for row in &state.responsibilities {
        for (m, w) in mass.iter_mut().zip(row) {
            *m += w;
        }
    }
    mass
}

/// `φ_j = α_j + α Σ_i ω_j^i`.
pub fn update_weight_factor(state: &mut VariationalState, prior: &PriorSpec, alpha: f64) -> Result<()> {
    if prior.k() != state.k() {
        return Err(Error::Shape("prior and state disagree on K".into()));
    }
    let mass = column_mass(state);
    let phi = prior
        .weight_prior
        .concentration()
        .iter()
        .zip(&mass)
        .map(|(a, m)| a + alpha * m)
        .collect();
    state.weight_factor = DirichletParams::new(phi)?;
    Ok(())
}

/// Exact block update of component factor `j` given the responsibilities.
pub fn update_component_factor(
    state: &mut VariationalState,
    data: &Dataset,
    prior: &PriorSpec,
    family: ComponentFamily,
    alpha: f64,
    j: usize,
) -> Result<()> {
    if j >= state.k() || j >= prior.k() {
        return Err(Error::Shape(format!("component index {j} out of range")));
    }
    let resp = &state.responsibilities;
    let weight = |i: usize| resp[i][j];
    let new = match (&prior.component_priors[j], data) {
        (ComponentPrior::Dirichlet(beta), Dataset::Categorical { values, .. }) => {
            let mut counts = vec![0.0; beta.dim()];
            for (i, &v) in values.iter().enumerate() {
                counts[v - 1] += weight(i);
            }
            let gamma = beta.concentration().iter().zip(&counts).map(|(b, c)| b + alpha * c).collect();
            ComponentFactor::Dirichlet(DirichletParams::new(gamma)?)
        }
        (ComponentPrior::GaussianMean(p), Dataset::Real(xs)) => {
            let Some(v2) = family.known_variance() else {
                return Err(Error::Config("a Gaussian mean prior needs the known-variance family".into()));
            };
            let (mass, sum) = weighted_sums(xs, resp, j);
            known_variance_update(p, mass, sum, alpha, v2)?
        }
        (ComponentPrior::Nig(p), Dataset::Real(xs)) => ComponentFactor::Nig(nig_update(p, xs, resp, j, alpha)?),
        (ComponentPrior::FactorizedNormalIg { mean: pm, variance: pv }, Dataset::Real(xs)) => {
            let ComponentFactor::NormalIg { variance: current, .. } = &state.component_factors[j] else {
                return Err(Error::Config(format!("factor {j} is not a Normal-Inverse-Gamma product")));
            };
            let (mass, sum) = weighted_sums(xs, resp, j);
            let e_prec = current.mean_inverse();
            let prec = 1.0 / pm.variance() + alpha * mass * e_prec;
            let mean = GaussianParams::floored((pm.mean() / pm.variance() + alpha * e_prec * sum) / prec, 1.0 / prec)?;
            let mut spread = 0.0;
            for (i, &x) in xs.iter().enumerate() {
                let d = x - mean.mean();
                spread += resp[i][j] * (d * d + mean.variance());
            }
            let variance = InverseGammaParams::new(pv.shape() + 0.5 * alpha * mass, pv.scale() + 0.5 * alpha * spread)?;
            ComponentFactor::NormalIg { mean, variance }
        }
        _ => return Err(Error::Config(format!("prior for component {j} does not match the data kind"))),
    };
    state.component_factors[j] = new;
    Ok(())
}

fn weighted_sums(xs: &[f64], resp: &[Vec<f64>], j: usize) -> (f64, f64) {
    let mut mass = 0.0;
    let mut sum = 0.0;
    for (x, row) in xs.iter().zip(resp) {
        mass += row[j];
        sum += row[j] * x;
    }
    (mass, sum)
}

fn known_variance_update(prior: &GaussianParams, mass: f64, sum: f64, alpha: f64, v2: f64) -> Result<ComponentFactor> {
    let prec = 1.0 / prior.variance() + alpha * mass / v2;
    let mean = (prior.mean() / prior.variance() + alpha * sum / v2) / prec;
    Ok(ComponentFactor::Gaussian(GaussianParams::floored(mean, 1.0 / prec)?))
}

fn nig_update(prior: &NigParams, xs: &[f64], resp: &[Vec<f64>], j: usize, alpha: f64) -> Result<NigParams> {
    let (mass, sum) = weighted_sums(xs, resp, j);
    if mass <= 0.0 {
        return Ok(*prior);
    }
    let centre = sum / mass;
    let mut scatter = 0.0;
    for (x, row) in xs.iter().zip(resp) {
        let d = x - centre;
        scatter += row[j] * d * d;
    }
    let n_eff = alpha * mass;
    let lambda0 = prior.precision_scale();
    let lambda = lambda0 + n_eff;
    let offset = centre - prior.location();
    NigParams::new(
        (lambda0 * prior.location() + alpha * sum) / lambda,
        lambda,
        prior.shape() + 0.5 * n_eff,
        prior.scale() + 0.5 * alpha * scatter + 0.5 * lambda0 * n_eff * offset * offset / lambda,
    )
}

/// `α Σ_i Σ_j ω_j^i [E log p_j + E log q_{θ_j}(X_i) − log ω_j^i] − KL(state ‖ prior)`.
pub fn surrogate_elbo(
    state: &VariationalState,
    data: &Dataset,
    prior: &PriorSpec,
    family: ComponentFamily,
    alpha: f64,
) -> Result<f64> {
    check_shapes(state, data, prior)?;
    let moments = factor_moments(state, family)?;
    let elw = weight_terms(state)?;
    let mut fit = 0.0;
    for (x, row) in data.iter().zip(&state.responsibilities) {
        for (j, &w) in row.iter().enumerate() {
            if w > 0.0 {
                fit += w * (elw[j] + moments[j].expected_log_density(x)? - w.ln());
            }
        }
    }
    Ok(alpha * fit - kl_state_to_prior(state, prior)?)
}

/// `α E_{θ ~ ρ}[ℓ_n(θ)] − KL(ρ ‖ π)` with the expectation estimated from
/// `n_samples` draws of θ.
pub fn exact_elbo_mc(
    state: &VariationalState,
    data: &Dataset,
    prior: &PriorSpec,
    family: ComponentFamily,
    alpha: f64,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    let kl = kl_state_to_prior(state, prior)?;
    if data.is_empty() {
        return Ok(McEstimate { estimate: -kl, std_error: 0.0 });
    }
    if n_samples == 0 {
        return Err(Error::Config("Monte-Carlo ELBO needs at least one sample".into()));
    }
    data.check_family(family)?;
    let mut rng = seeded(seed);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for s in 0..n_samples {
        let theta = state.sample_params(family, &mut rng)?;
        let ll = log_likelihood(&theta, data)?;
        let delta = ll - mean;
        mean += delta / (s + 1) as f64;
        m2 += delta * (ll - mean);
    }
    let se = if n_samples > 1 { (m2 / (n_samples - 1) as f64 / n_samples as f64).sqrt() } else { 0.0 };
    Ok(McEstimate { estimate: alpha * mean - kl, std_error: alpha * se })
}

/// Starting responsibilities for one restart.
pub fn initial_responsibilities(
    data: &Dataset,
    prior: &PriorSpec,
    family: ComponentFamily,
    init: &Init,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let k = prior.k();
    let n = data.len();
    let mut rng = seeded(seed);
    let flat = vec![1.0; k];
    let random_rows = |rng: &mut SeededRng| (0..n).map(|_| draw_dirichlet(&flat, rng)).collect::<Vec<_>>();
    match init {
        Init::RandomResponsibilities => Ok(random_rows(&mut rng)),
        Init::KMeansLike => match data.as_real() {
            Some(xs) if k > 1 && n > 0 => Ok(kmeans_like(xs, k, &mut rng)),
            _ => Ok(random_rows(&mut rng)),
        },
        Init::PriorDraw => {
            let state = VariationalState::from_prior(prior, 0);
            let theta = state.sample_params(family, &mut rng)?;
            let mut rows = Vec::with_capacity(n);
            let mut logits = vec![0.0; k];
            for (i, x) in data.iter().enumerate() {
                for (j, l) in logits.iter_mut().enumerate() {
                    *l = theta.component_log_density(j, x)?;
                }
                let lse = log_sum_exp(&logits);
                if !lse.is_finite() {
                    return Err(Error::DegenerateObservation { row: i });
                }
                rows.push(logits.iter().map(|l| (l - lse).exp()).collect());
            }
            Ok(rows)
        }
        Init::Given(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != k) {
                return Err(Error::Shape(format!("initial responsibilities must be {n} × {k}")));
            }
            for (i, r) in rows.iter().enumerate() {
                let s: f64 = r.iter().sum();
                if r.iter().any(|&w| !(w >= 0.0)) || (s - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!("initial responsibility row {i} is not on the simplex")));
                }
            }
            Ok(rows.clone())
        }
    }
}

fn kmeans_like(xs: &[f64], k: usize, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    use rand::Rng;
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut centers: Vec<f64> = (0..k)
        .map(|j| {
            let lo = j * n / k;
            let hi = ((j + 1) * n / k).max(lo + 1).min(n);
            sorted[rng.random_range(lo..hi)]
        })
        .collect();
    let nearest = |x: f64, centers: &[f64]| {
        let mut best = 0;
        for j in 1..centers.len() {
            if (x - centers[j]).abs() < (x - centers[best]).abs() {
                best = j;
            }
        }
        best
    };
    for _ in 0..10 {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for &x in xs {
            let j = nearest(x, &centers);
            sums[j] += x;
            counts[j] += 1;
        }
        let mut moved = false;
        for j in 0..k {
            if counts[j] > 0 {
                let c = sums[j] / counts[j] as f64;
                moved |= c != centers[j];
                centers[j] = c;
            }
        }
        if !moved {
            break;
        }
    }
    xs.iter()
        .map(|&x| {
            let mut row = vec![0.0; k];
            row[nearest(x, &centers)] = 1.0;
            row
        })
        .collect()
}

struct Run {
    state: VariationalState,
    trace: Vec<f64>,
    sweeps: usize,
    converged: bool,
}

fn checked_step(
    before: &mut f64,
    what: &str,
    state: &VariationalState,
    data: &Dataset,
    prior: &PriorSpec,
    family: ComponentFamily,
    alpha: f64,
) -> Result<()> {
    let after = surrogate_elbo(state, data, prior, family, alpha)?;
    if after < *before - MONOTONE_SLACK * before.abs().max(1.0) {
        return Err(Error::Invariant(format!("objective decreased from {before} to {after} after {what}")));
    }
    *before = after;
    Ok(())
}

fn sweep(
    state: &mut VariationalState,
    data: &Dataset,
    prior: &PriorSpec,
    family: ComponentFamily,
    config: &FitConfig,
    skip_responsibilities: bool,
) -> Result<()> {
    let alpha = config.alpha;
    let mut level = if config.check_monotone && !skip_responsibilities {
        surrogate_elbo(state, data, prior, family, alpha)?
    } else {
        f64::NEG_INFINITY
    };
    if !skip_responsibilities {
        update_responsibilities(state, data, family)?;
        if config.check_monotone {
            checked_step(&mut level, "responsibilities", state, data, prior, family, alpha)?;
        }
    }
    update_weight_factor(state, prior, alpha)?;
    if config.check_monotone && !skip_responsibilities {
        checked_step(&mut level, "weight factor", state, data, prior, family, alpha)?;
    }
    for j in 0..state.k() {
        update_component_factor(state, data, prior, family, alpha, j)?;
        if config.check_monotone && !skip_responsibilities {
            checked_step(&mut level, &format!("component {j}"), state, data, prior, family, alpha)?;
        }
    }
    Ok(())
}

fn run_once(
    data: &Dataset,
    prior: &PriorSpec,
    family: ComponentFamily,
    config: &FitConfig,
    seed: u64,
) -> Result<Run> {
    let mut state = VariationalState::from_prior(prior, data.len());
    state.responsibilities = initial_responsibilities(data, prior, family, &config.init, seed)?;
    sweep(&mut state, data, prior, family, config, true)?;
    let mut trace = vec![surrogate_elbo(&state, data, prior, family, config.alpha)?];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < config.max_sweeps {
        sweep(&mut state, data, prior, family, config, false)?;
        sweeps += 1;
        let prev = *trace.last().expect("trace starts non-empty");
        let cur = surrogate_elbo(&state, data, prior, family, config.alpha)?;
        trace.push(cur);
        if !cur.is_finite() {
            return Err(Error::Invariant(format!("objective became {cur} at sweep {sweeps}")));
        }
        if cur < prev - MONOTONE_SLACK * prev.abs() {
            log::warn!("surrogate objective decreased from {prev} to {cur} at sweep {sweeps}");
        }
        if cur == prev || (cur - prev).abs() <= config.rel_tol * prev.abs() {
            converged = true;
            break;
        }
    }
    Ok(Run { state, trace, sweeps, converged })
}

/// Fit a K-component mixture, K being the length of the prior.
pub fn fit(data: &Dataset, prior: &PriorSpec, family: ComponentFamily, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    prior.validate(family)?;
    data.check_family(family)?;
    let warning = prior.weight_prior_warning();
    if warning {
        log::warn!("weight prior concentrations lie outside [2/K, 1]");
    }
    if data.is_empty() {
        return Ok(FitResult {
            state: VariationalState::from_prior(prior, 0),
            elbo_trace: vec![0.0],
            surrogate_elbo: 0.0,
            exact_elbo_mc: None,
            sweeps: 0,
            converged: true,
            restart: 0,
            restart_elbos: vec![0.0; config.restarts],
            weight_prior_warning: warning,
        });
    }
    let runs = map_indexed(config.threads, config.restarts, |r| {
        run_once(data, prior, family, config, derive_seed(config.seed, &[r as u64]))
    })?;
    let restart_elbos: Vec<f64> = runs.iter().map(|r| *r.trace.last().unwrap()).collect();
    let mut best = 0;
    for (r, &e) in restart_elbos.iter().enumerate().skip(1) {
        if e > restart_elbos[best] {
            best = r;
        }
    }
    let run = runs.into_iter().nth(best).unwrap();
    Ok(FitResult {
        state: run.state,
        surrogate_elbo: restart_elbos[best],
        elbo_trace: run.trace,
        exact_elbo_mc: None,
        sweeps: run.sweeps,
        converged: run.converged,
        restart: best,
        restart_elbos,
        weight_prior_warning: warning,
    })
}
