//! Expectation-maximization for Gaussian mixtures with a known, shared
//! component variance.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cavi::{initial_responsibilities, Init};
use crate::error::{Error, Result};
use crate::mixture::{log_sum_exp, ComponentFamily, Dataset, MixtureParams};
use crate::parallel::map_indexed;
use crate::prior::{ComponentPrior, PriorSpec};
use crate::rng::{derive_seed, seeded, SeededRng};

/// Responsibility mass below which a component counts as empty.
pub const EMPTY_MASS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Same strategies as the variational fit; `PriorDraw` is not supported.
    pub init: Init,
    pub threads: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self { max_iters: 500, rel_tol: 1e-8, restarts: 1, seed: 0, init: Init::RandomResponsibilities, threads: 1 }
    }
}

/// A component whose mean was moved to a random data point after it lost all
/// responsibility mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reseed {
    pub iteration: usize,
    pub component: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmState {
    pub params: MixtureParams,
    /// Log-likelihood of the parameters entering each E-step.
    pub log_lik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub reseeds: Vec<Reseed>,
    pub restart: usize,
    pub restart_log_liks: Vec<f64>,
}

/// Weights and means from responsibilities.
fn m_step(
    xs: &[f64],
    resp: &[Vec<f64>],
    k: usize,
    iteration: usize,
    rng: &mut SeededRng,
    reseeds: &mut Vec<Reseed>,
) -> (Vec<f64>, Vec<f64>) {
    let n = xs.len() as f64;
    let mut mass = vec![0.0; k];
    let mut sums = vec![0.0; k];
    for (x, row) in xs.iter().zip(resp) {
        for j in 0..k {
            mass[j] += row[j];
            sums[j] += row[j] * x;
        }
    }
    let mut weights: Vec<f64> = mass.iter().map(|m| m / n).collect();
    let mut means = vec![0.0; k];
    for j in 0..k {
        if mass[j] < EMPTY_MASS {
            means[j] = xs[rng.random_range(0..xs.len())];
            weights[j] = 1.0 / n;
            reseeds.push(Reseed { iteration, component: j });
            log::info!("EM reseeded empty component {j} at iteration {iteration}");
        } else {
            means[j] = sums[j] / mass[j];
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    (weights, means)
}

/// Responsibilities and log-likelihood under the current parameters.
fn e_step(xs: &[f64], weights: &[f64], means: &[f64], variance: f64, resp: &mut [Vec<f64>]) -> Result<f64> {
    let k = weights.len();
    let log_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    let norm = -0.5 * (2.0 * std::f64::consts::PI * variance).ln();
    let mut logits = vec![0.0; k];
    let mut ll = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        for j in 0..k {
            let d = x - means[j];
            logits[j] = log_w[j] + norm - d * d / (2.0 * variance);
        }
        let lse = log_sum_exp(&logits);
        if !lse.is_finite() {
            return Err(Error::DegenerateObservation { row: i });
        }
        ll += lse;
        for j in 0..k {
            resp[i][j] = (logits[j] - lse).exp();
        }
    }
    Ok(ll)
}

fn run_once(xs: &[f64], k: usize, variance: f64, config: &EmConfig, seed: u64) -> Result<EmState> {
    let family = ComponentFamily::GaussianKnownVar { component_variance: variance };
    let data = Dataset::Real(xs.to_vec());
    let prior = PriorSpec::symmetric(1.0, ComponentPrior::gaussian_mean(1.0)?, k)?;
    if config.init == Init::PriorDraw {
        return Err(Error::Config("EM has no prior to draw from".into()));
    }
    let mut resp = initial_responsibilities(&data, &prior, family, &config.init, seed)?;
    let mut rng = seeded(derive_seed(seed, &[1]));
    let mut reseeds = Vec::new();
    let (mut weights, mut means) = m_step(xs, &resp, k, 0, &mut rng, &mut reseeds);
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    for it in 0..=config.max_iters {
        let ll = e_step(xs, &weights, &means, variance, &mut resp)?;
        if let Some(&prev) = trace.last() {
            if ll == prev || (ll - prev).abs() <= config.rel_tol * prev.abs() {
                trace.push(ll);
                converged = true;
                break;
            }
        }
        trace.push(ll);
        if it == config.max_iters {
            break;
        }
        (weights, means) = m_step(xs, &resp, k, it + 1, &mut rng, &mut reseeds);
    }
    Ok(EmState {
        params: MixtureParams::gaussian_known_variance(weights, means, variance)?,
        iterations: trace.len() - 1,
        log_lik_trace: trace,
        converged,
        reseeds,
        restart: 0,
        restart_log_liks: Vec::new(),
    })
}

/// Fit by EM with `config.restarts` seeded restarts; the winner has the
/// highest final log-likelihood, ties going to the lowest restart index.
pub fn em_fit(xs: &[f64], k: usize, component_variance: f64, config: &EmConfig) -> Result<EmState> {
    if k == 0 {
        return Err(Error::Config("K must be at least 1".into()));
    }
    if xs.is_empty() {
        return Err(Error::Config("EM needs at least one observation".into()));
    }
    if !(component_variance > 0.0) {
        return Err(Error::Config(format!("component variance must be positive, got {component_variance}")));
    }
    if config.restarts == 0 || !(config.rel_tol > 0.0) {
        return Err(Error::Config("EM needs restarts >= 1 and a positive tolerance".into()));
    }
    Dataset::real(xs.to_vec())?;
    let runs = map_indexed(config.threads, config.restarts, |r| {
        run_once(xs, k, component_variance, config, derive_seed(config.seed, &[r as u64]))
    })?;
    let finals: Vec<f64> = runs.iter().map(|r| *r.log_lik_trace.last().unwrap()).collect();
    let mut best = 0;
    for (r, &ll) in finals.iter().enumerate().skip(1) {
        if ll > finals[best] {
            best = r;
        }
    }
    let mut state = runs.into_iter().nth(best).unwrap();
    state.restart = best;
    state.restart_log_liks = finals;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::{log_likelihood, sample_mixture};
    use proptest::prelude::*;

    #[test]
    fn single_component_is_sample_mean() {
        let xs = [1.0, 2.5, -0.5, 4.0];
        let s = em_fit(&xs, 1, 1.0, &EmConfig::default()).unwrap();
        let mean = xs.iter().sum::<f64>() / 4.0;
        assert!((s.params.components()[0].location() - mean).abs() < 1e-15);
        assert_eq!(s.params.weights(), &[1.0]);
        assert_eq!(s.iterations, 1);
        assert!(s.converged);
    }

    #[test]
    fn two_points_symmetric_fixed_point() {
        let a = 10.0;
        let cfg = EmConfig { init: Init::Given(vec![vec![1.0, 0.0], vec![0.0, 1.0]]), ..EmConfig::default() };
        let s = em_fit(&[-a, a], 2, 1.0, &cfg).unwrap();
        let m: Vec<f64> = s.params.components().iter().map(|c| c.location()).collect();
        assert!((m[0] + a).abs() < 1e-12 && (m[1] - a).abs() < 1e-12, "{m:?}");
        assert!((s.params.weights()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn separated_means_are_recovered() {
        let truth = MixtureParams::gaussian_known_variance(vec![0.5, 0.5], vec![-10.0, 10.0], 1.0).unwrap();
        let data = sample_mixture(&truth, 500, 17);
        let xs = data.as_real().unwrap();
        let s = em_fit(xs, 2, 1.0, &EmConfig { restarts: 3, seed: 1, ..EmConfig::default() }).unwrap();
        let mut m: Vec<f64> = s.params.components().iter().map(|c| c.location()).collect();
        m.sort_by(f64::total_cmp);
        let band = 3.0 / 250f64.sqrt();
        assert!((m[0] + 10.0).abs() < band && (m[1] - 10.0).abs() < band, "{m:?}");
        // Grid search over the mean pair: the EM answer must be at least as good
        // as every grid point near the truth.
        let ll_em = log_likelihood(&s.params, &data).unwrap();
        let w = s.params.weights().to_vec();
        let order: Vec<usize> = if s.params.components()[0].location() < 0.0 { vec![0, 1] } else { vec![1, 0] };
        for a in -20..=20 {
            for b in -20..=20 {
                let mu = [m[0] + a as f64 * 0.01, m[1] + b as f64 * 0.01];
                let cand = MixtureParams::gaussian_known_variance(
                    vec![w[order[0]], w[order[1]]],
                    mu.to_vec(),
                    1.0,
                )
                .unwrap();
                assert!(log_likelihood(&cand, &data).unwrap() <= ll_em + 1e-9);
            }
        }
    }

    #[test]
    fn empty_component_is_reseeded() {
        let xs = [0.0, 0.1, 0.2, 0.3];
        let cfg = EmConfig { init: Init::Given(vec![vec![1.0, 0.0]; 4]), max_iters: 5, ..EmConfig::default() };
        let s = em_fit(&xs, 2, 1.0, &cfg).unwrap();
        assert!(!s.reseeds.is_empty());
        assert_eq!(s.reseeds[0], Reseed { iteration: 0, component: 1 });
        let total: f64 = s.params.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        assert!(em_fit(&[], 2, 1.0, &EmConfig::default()).is_err());
        assert!(em_fit(&[1.0], 0, 1.0, &EmConfig::default()).is_err());
        assert!(em_fit(&[1.0], 1, 0.0, &EmConfig::default()).is_err());
        assert!(em_fit(&[1.0], 1, 1.0, &EmConfig { init: Init::PriorDraw, ..EmConfig::default() }).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn log_likelihood_is_monotone(
            xs in prop::collection::vec(-20.0f64..20.0, 2..60),
            k in 1usize..5,
            seed in any::<u64>(),
        ) {
            let cfg = EmConfig { seed, restarts: 2, max_iters: 100, ..EmConfig::default() };
            let s = em_fit(&xs, k, 1.5, &cfg).unwrap();
            let mut last_reseed = s.reseeds.iter().map(|r| r.iteration).collect::<Vec<_>>();
            last_reseed.sort();
            for (t, w) in s.log_lik_trace.windows(2).enumerate() {
                // Entry t+1 follows the M-step of iteration t+1.
                if last_reseed.binary_search(&(t + 1)).is_err() {
                    prop_assert!(w[1] >= w[0] - 1e-8 * w[0].abs(), "{:?}", s.log_lik_trace);
                }
            }
            let total: f64 = s.params.weights().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(s.params.weights().iter().all(|&w| w >= 0.0));
        }

        #[test]
        fn permutation_equivariance(xs in prop::collection::vec(-10.0f64..10.0, 3..40), seed in any::<u64>()) {
            let data = Dataset::Real(xs.clone());
            let prior = PriorSpec::symmetric(1.0, ComponentPrior::gaussian_mean(1.0).unwrap(), 3).unwrap();
            let fam = ComponentFamily::GaussianKnownVar { component_variance: 1.0 };
            let rows = initial_responsibilities(&data, &prior, fam, &Init::RandomResponsibilities, seed).unwrap();
            let order = [2usize, 0, 1];
            let prow = rows.iter().map(|r| order.iter().map(|&o| r[o]).collect()).collect();
            let cfg = EmConfig { max_iters: 30, init: Init::Given(rows), ..EmConfig::default() };
            let a = em_fit(&xs, 3, 1.0, &cfg).unwrap();
            let b = em_fit(&xs, 3, 1.0, &EmConfig { init: Init::Given(prow), ..cfg.clone() }).unwrap();
            prop_assume!(a.reseeds.is_empty() && b.reseeds.is_empty());
            for (new, &old) in order.iter().enumerate() {
                let ma = a.params.components()[old].location();
                let mb = b.params.components()[new].location();
                prop_assert!((ma - mb).abs() <= 1e-8 * ma.abs().max(1.0));
                prop_assert!((a.params.weights()[old] - b.params.weights()[new]).abs() <= 1e-8);
            }
        }
    }
}
