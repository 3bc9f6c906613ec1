//! Seeded simulation studies: the three-method MAE comparison on random
//! unit-variance Gaussian mixtures, and the divergence-versus-bound sweep.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cavi::{fit, FitConfig, Init};
use crate::divergence::{renyi_divergence_mc, DirichletParams, McEstimate};
use crate::em::{em_fit, EmConfig};
use crate::error::{Error, Result};
use crate::mixture::{
    log_mixture_density, sample_mixture, sample_simplex_dirichlet, ComponentFamily, Dataset, MixtureParams,
};
use crate::parallel::map_indexed;
use crate::prior::{ComponentPrior, PriorSpec};
use crate::rates::{risk_bound, RateInputs};
use crate::rng::{derive_seed, seeded};

/// How the spread parameter of the true-mean distribution is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanScale {
    Variance,
    StdDev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchProtocol {
    pub n_datasets: usize,
    pub n_samples: usize,
    pub k: usize,
    /// True weights are drawn from a symmetric Dirichlet with this concentration.
    pub truth_weight_concentration: f64,
    /// True means are drawn from `N(0, mean_spread)` read through `mean_scale`.
    pub mean_spread: f64,
    pub mean_scale: MeanScale,
    pub component_variance: f64,
    pub runs_per_dataset: usize,
    pub alphas: Vec<f64>,
    pub include_em: bool,
    pub prior_weight_concentration: f64,
    pub prior_mean_variance: f64,
    pub rel_tol: f64,
    pub max_sweeps: usize,
    /// Shared by the variational fits and EM.
    pub init: Init,
    pub seed: u64,
    pub threads: usize,
}

impl Default for BenchProtocol {
    fn default() -> Self {
        Self {
            n_datasets: 10,
            n_samples: 1000,
            k: 3,
            truth_weight_concentration: 2.0 / 3.0,
            mean_spread: 10.0,
            mean_scale: MeanScale::Variance,
            component_variance: 1.0,
            runs_per_dataset: 5,
            alphas: vec![0.5, 1.0],
            include_em: true,
            prior_weight_concentration: 1.0,
            prior_mean_variance: 10.0,
            rel_tol: 1e-8,
            max_sweeps: 500,
            init: Init::RandomResponsibilities,
            seed: 0,
            threads: 1,
        }
    }
}

impl BenchProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.n_datasets == 0 || self.n_samples == 0 || self.k == 0 || self.runs_per_dataset == 0 {
            return Err(Error::Config("benchmark counts must be positive".into()));
        }
        if self.alphas.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
            return Err(Error::Config(format!("alphas must lie in (0, 1], got {:?}", self.alphas)));
        }
        if self.alphas.is_empty() && !self.include_em {
            return Err(Error::Config("no method to run".into()));
        }
        Ok(())
    }

    pub fn methods(&self) -> Vec<Method> {
        let mut m: Vec<Method> = self.alphas.iter().map(|&alpha| Method::Vb { alpha }).collect();
        if self.include_em {
            m.push(Method::Em);
        }
        m
    }

    fn mean_sd(&self) -> f64 {
        match self.mean_scale {
            MeanScale::Variance => self.mean_spread.sqrt(),
            MeanScale::StdDev => self.mean_spread,
        }
    }

    /// Draw the true mixture for dataset `d`.
    pub fn draw_truth(&self, d: usize) -> Result<MixtureParams> {
        let conc = DirichletParams::symmetric(self.truth_weight_concentration, self.k)?;
        let weights = sample_simplex_dirichlet(&conc, derive_seed(self.seed, &[d as u64, 0]));
        let mut rng = seeded(derive_seed(self.seed, &[d as u64, 1]));
        let sd = self.mean_sd();
        let means = (0..self.k)
            .map(|_| {
                let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
                sd * z
            })
            .collect();
        MixtureParams::gaussian_known_variance(weights, means, self.component_variance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    Vb { alpha: f64 },
    Em,
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::Vb { alpha } => format!("VB(alpha={alpha})"),
            Method::Em => "EM".into(),
        }
    }
}

/// Mean absolute errors after both parameter sets are sorted by mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mae {
    pub weights: f64,
    pub means: Vec<f64>,
}

impl Mae {
    pub fn total(&self) -> f64 {
        self.weights + self.means.iter().sum::<f64>()
    }
}

fn sorted_by_mean(p: &MixtureParams) -> (Vec<f64>, Vec<f64>) {
    let mut idx: Vec<usize> = (0..p.k()).collect();
    idx.sort_by(|&a, &b| p.components()[a].location().total_cmp(&p.components()[b].location()));
    (
        idx.iter().map(|&i| p.weights()[i]).collect(),
        idx.iter().map(|&i| p.components()[i].location()).collect(),
    )
}

pub fn mae(estimated: &MixtureParams, truth: &MixtureParams) -> Result<Mae> {
    if estimated.k() != truth.k() {
        return Err(Error::Shape(format!("estimated K = {} but true K = {}", estimated.k(), truth.k())));
    }
    if !estimated.family().is_gaussian() || !truth.family().is_gaussian() {
        return Err(Error::Config("MAE is defined for Gaussian mixtures".into()));
    }
    let (we, me) = sorted_by_mean(estimated);
    let (wt, mt) = sorted_by_mean(truth);
    let k = truth.k() as f64;
    Ok(Mae {
        weights: we.iter().zip(&wt).map(|(a, b)| (a - b).abs()).sum::<f64>() / k,
        means: me.iter().zip(&mt).map(|(a, b)| (a - b).abs()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub dataset: usize,
    pub restart: usize,
    pub mae: Mae,
    /// Surrogate ELBO for the variational fits, log-likelihood for EM.
    pub elbo: f64,
}

/// Means and standard deviations over datasets of `[MAE(p), MAE(θ_1), ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    /// Restart with the lowest total MAE per dataset.
    pub best_by_mae: Summary,
    /// Restart with the highest objective per dataset.
    pub best_by_elbo: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub crate_version: String,
    pub threads: usize,
    pub em_init: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub protocol: BenchProtocol,
    pub methods: Vec<MethodSummary>,
    pub truths: Vec<MixtureParams>,
    pub runs: Vec<RunRecord>,
    pub environment: Environment,
}

/// Run every method `runs_per_dataset` times on one dataset.
pub fn evaluate_dataset(
    protocol: &BenchProtocol,
    dataset: usize,
    data: &Dataset,
    truth: &MixtureParams,
) -> Result<Vec<RunRecord>> {
    let family = ComponentFamily::GaussianKnownVar { component_variance: protocol.component_variance };
    let prior = PriorSpec::symmetric(
        protocol.prior_weight_concentration,
        ComponentPrior::gaussian_mean(protocol.prior_mean_variance)?,
        protocol.k,
    )?;
    let xs = data.as_real().ok_or_else(|| Error::Config("benchmark data must be real".into()))?;
    let mut records = Vec::new();
    for (m, method) in protocol.methods().into_iter().enumerate() {
        for r in 0..protocol.runs_per_dataset {
            let seed = derive_seed(protocol.seed, &[dataset as u64, 2 + m as u64, r as u64]);
            let (est, elbo) = match method {
                Method::Vb { alpha } => {
                    let cfg = FitConfig {
                        alpha,
                        rel_tol: protocol.rel_tol,
                        max_sweeps: protocol.max_sweeps,
                        restarts: 1,
                        seed,
                        init: protocol.init.clone(),
                        threads: 1,
                        check_monotone: false,
                    };
                    let res = fit(data, &prior, family, &cfg)?;
                    (res.state.point_estimate(family)?, res.surrogate_elbo)
                }
                Method::Em => {
                    let cfg = EmConfig {
                        max_iters: protocol.max_sweeps,
                        rel_tol: protocol.rel_tol,
                        restarts: 1,
                        seed,
                        init: protocol.init.clone(),
                        threads: 1,
                    };
                    let res = em_fit(xs, protocol.k, protocol.component_variance, &cfg)?;
                    let ll = *res.log_lik_trace.last().expect("non-empty trace");
                    (res.params, ll)
                }
            };
            records.push(RunRecord { method: method.name(), dataset, restart: r, mae: mae(&est, truth)?, elbo });
        }
    }
    Ok(records)
}

fn summarize(rows: &[&RunRecord]) -> Summary {
    let width = 1 + rows.first().map_or(0, |r| r.mae.means.len());
    let vecs: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| std::iter::once(r.mae.weights).chain(r.mae.means.iter().copied()).collect())
        .collect();
    let n = rows.len() as f64;
    let mean: Vec<f64> = (0..width).map(|c| vecs.iter().map(|v| v[c]).sum::<f64>() / n).collect();
    let sd = (0..width)
        .map(|c| {
            if rows.len() < 2 {
                return 0.0;
            }
            let ss: f64 = vecs.iter().map(|v| (v[c] - mean[c]) * (v[c] - mean[c])).sum();
            (ss / (n - 1.0)).sqrt()
        })
        .collect();
    Summary { mean, sd }
}

/// Pick one run per dataset: lowest total MAE, or highest objective. Ties go
/// to the lowest restart index.
fn pick<'a>(runs: &'a [RunRecord], method: &str, datasets: usize, by_mae: bool) -> Vec<&'a RunRecord> {
    (0..datasets)
        .map(|d| {
            let mut best: Option<&RunRecord> = None;
            for r in runs.iter().filter(|r| r.method == method && r.dataset == d) {
                let better = match best {
                    None => true,
                    Some(b) if by_mae => r.mae.total() < b.mae.total(),
                    Some(b) => r.elbo > b.elbo,
                };
                if better {
                    best = Some(r);
                }
            }
            best.expect("every dataset has runs")
        })
        .collect()
}

pub fn run_supplement_bench(protocol: &BenchProtocol) -> Result<BenchReport> {
    protocol.validate()?;
    let per_dataset = map_indexed(protocol.threads, protocol.n_datasets, |d| {
        let truth = protocol.draw_truth(d)?;
        let data = sample_mixture(&truth, protocol.n_samples, derive_seed(protocol.seed, &[d as u64, 2]));
        let records = evaluate_dataset(protocol, d, &data, &truth)?;
        Ok((truth, records))
    })?;
    let mut truths = Vec::new();
    let mut runs = Vec::new();
    for (t, r) in per_dataset {
        let order = {
            let mut idx: Vec<usize> = (0..t.k()).collect();
            idx.sort_by(|&a, &b| t.components()[a].location().total_cmp(&t.components()[b].location()));
            idx
        };
        truths.push(t.permuted(&order)?);
        runs.extend(r);
    }
    let methods = protocol
        .methods()
        .iter()
        .map(|m| {
            let name = m.name();
            MethodSummary {
                best_by_mae: summarize(&pick(&runs, &name, protocol.n_datasets, true)),
                best_by_elbo: summarize(&pick(&runs, &name, protocol.n_datasets, false)),
                method: name,
            }
        })
        .collect();
    Ok(BenchReport {
        protocol: protocol.clone(),
        methods,
        truths,
        runs,
        environment: Environment {
            crate_version: env!("CARGO_PKG_VERSION").into(),
            threads: protocol.threads,
            em_init: format!("{:?} (same as the variational fits)", protocol.init),
        },
    })
}

/// Flat CSV: `method,dataset,restart,mae_p,mae_t1..mae_tK,elbo`.
pub fn bench_csv(report: &BenchReport) -> String {
    let k = report.protocol.k;
    let mut out = String::from("method,dataset,restart,mae_p");
    for j in 1..=k {
        write!(out, ",mae_t{j}").unwrap();
    }
    out.push_str(",elbo\n");
    for r in &report.runs {
        write!(out, "{},{},{},{}", r.method, r.dataset, r.restart, r.mae.weights).unwrap();
        for m in &r.mae.means {
            write!(out, ",{m}").unwrap();
        }
        writeln!(out, ",{}", r.elbo).unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceConfig {
    pub n_grid: Vec<usize>,
    pub truth: MixtureParams,
    /// Tempering of the fit and order of the Rényi divergence; in (0, 1).
    pub alpha: f64,
    pub mc_samples: usize,
    pub replicates: usize,
    pub prior_weight_concentration: f64,
    /// Prior variance of the component means (Gaussian truths) or the
    /// symmetric Dirichlet concentration (categorical truths).
    pub prior_scale: f64,
    pub restarts: usize,
    pub init: Init,
    pub seed: u64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRow {
    pub n: usize,
    pub replicates: usize,
    pub divergence: f64,
    pub std_error: f64,
    pub rate: f64,
    pub bound: f64,
    pub within_bound: bool,
}

/// `D_α(fitted ‖ truth)` by sampling from the fitted mixture.
pub fn predictive_divergence(
    fitted: &MixtureParams,
    truth: &MixtureParams,
    alpha: f64,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if fitted.family() != truth.family() {
        return Err(Error::Config("fitted and true mixtures belong to different families".into()));
    }
    renyi_divergence_mc(
        |x| log_mixture_density(fitted, *x).unwrap_or(f64::NEG_INFINITY),
        |x| log_mixture_density(truth, *x).unwrap_or(f64::NEG_INFINITY),
        |rng| fitted.sample_observation(rng),
        alpha,
        samples,
        seed,
    )
}

fn divergence_prior(cfg: &DivergenceConfig, k: usize) -> Result<PriorSpec> {
    let comp = match cfg.truth.family() {
        ComponentFamily::Multinomial { categories } => ComponentPrior::symmetric_dirichlet(cfg.prior_scale, categories)?,
        ComponentFamily::GaussianKnownVar { .. } => ComponentPrior::gaussian_mean(cfg.prior_scale)?,
        ComponentFamily::GaussianUnknownVar => {
            return Err(Error::Config("the divergence sweep supports known-variance and categorical truths".into()))
        }
    };
    PriorSpec::symmetric(cfg.prior_weight_concentration, comp, k)
}

/// Rate inputs matching the prior used by the sweep.
pub fn divergence_rate_inputs(cfg: &DivergenceConfig) -> Result<RateInputs> {
    match cfg.truth.family() {
        ComponentFamily::Multinomial { categories } => Ok(RateInputs::Multinomial { categories }),
        ComponentFamily::GaussianKnownVar { component_variance } => Ok(RateInputs::GaussianKnownVar {
            component_variance,
            prior_variance: cfg.prior_scale,
            true_means: cfg.truth.components().iter().map(|c| c.location()).collect(),
        }),
        ComponentFamily::GaussianUnknownVar => {
            Err(Error::Config("the divergence sweep supports known-variance and categorical truths".into()))
        }
    }
}

/// Divergence of one fitted replicate at sample size `n`.
pub fn divergence_replicate(cfg: &DivergenceConfig, n: usize, replicate: usize) -> Result<McEstimate> {
    let family = cfg.truth.family();
    let k = cfg.truth.k();
    let prior = divergence_prior(cfg, k)?;
    let data = sample_mixture(&cfg.truth, n, derive_seed(cfg.seed, &[n as u64, replicate as u64, 0]));
    let fc = FitConfig {
        alpha: cfg.alpha,
        restarts: cfg.restarts,
        seed: derive_seed(cfg.seed, &[n as u64, replicate as u64, 1]),
        init: cfg.init.clone(),
        ..FitConfig::default()
    };
    let fitted = fit(&data, &prior, family, &fc)?.state.point_estimate(family)?;
    predictive_divergence(&fitted, &cfg.truth, cfg.alpha, cfg.mc_samples, derive_seed(cfg.seed, &[n as u64, replicate as u64, 2]))
}

pub fn run_divergence_experiment(cfg: &DivergenceConfig) -> Result<Vec<DivergenceRow>> {
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::Config(format!("the divergence sweep needs alpha in (0, 1), got {}", cfg.alpha)));
    }
    if cfg.replicates == 0 || cfg.n_grid.is_empty() || cfg.n_grid.contains(&0) {
        return Err(Error::Config("need at least one replicate and positive sample sizes".into()));
    }
    let inputs = divergence_rate_inputs(cfg)?;
    let k = cfg.truth.k();
    cfg.n_grid
        .iter()
        .map(|&n| {
            let ests = map_indexed(cfg.threads, cfg.replicates, |r| divergence_replicate(cfg, n, r))?;
            let reps = ests.len() as f64;
            let mean = ests.iter().map(|e| e.estimate).sum::<f64>() / reps;
            let std_error = if ests.len() > 1 {
                let ss: f64 = ests.iter().map(|e| (e.estimate - mean) * (e.estimate - mean)).sum();
                (ss / (reps - 1.0) / reps).sqrt()
            } else {
                ests[0].std_error
            };
            let rate = inputs.rate(n as u64, k)?;
            let bound = risk_bound(cfg.alpha, k, rate)?.expect("alpha < 1");
            Ok(DivergenceRow {
                n,
                replicates: cfg.replicates,
                divergence: mean,
                std_error,
                rate,
                bound,
                within_bound: mean <= bound,
            })
        })
        .collect()
}

pub fn divergence_csv(rows: &[DivergenceRow]) -> String {
    let mut out = String::from("n,replicates,divergence,std_error,rate,bound,within_bound\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n, r.replicates, r.divergence, r.std_error, r.rate, r.bound, r.within_bound
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::rate_gaussian_known_var;
    use proptest::prelude::*;

    fn gm(w: &[f64], m: &[f64]) -> MixtureParams {
        MixtureParams::gaussian_known_variance(w.to_vec(), m.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn mae_examples() {
        let t = gm(&[0.2, 0.3, 0.5], &[0.0, 1.0, 2.0]);
        assert_eq!(mae(&t, &t).unwrap(), Mae { weights: 0.0, means: vec![0.0; 3] });
        let shuffled = t.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(mae(&shuffled, &t).unwrap(), Mae { weights: 0.0, means: vec![0.0; 3] });
        let eq = gm(&[1.0 / 3.0; 3], &[0.0, 1.0, 2.0]);
        let est = gm(&[1.0 / 3.0; 3], &[0.0, 1.0, 2.5]);
        assert_eq!(mae(&est, &eq).unwrap(), Mae { weights: 0.0, means: vec![0.0, 0.0, 0.5] });
        assert!(mae(&gm(&[1.0], &[0.0]), &t).is_err());
    }

    #[test]
    fn zero_noise_smoke() {
        // Data equal to the expected sufficient statistics: 30% of the points
        // exactly at −4, 70% exactly at 4.
        let n = 10_000;
        let truth = gm(&[0.3, 0.7], &[-4.0, 4.0]);
        let xs: Vec<f64> = (0..n).map(|i| if i < 3 * n / 10 { -4.0 } else { 4.0 }).collect();
        let protocol = BenchProtocol { k: 2, runs_per_dataset: 2, seed: 3, ..BenchProtocol::default() };
        let runs = evaluate_dataset(&protocol, 0, &Dataset::Real(xs), &truth).unwrap();
        for method in protocol.methods() {
            let best = pick(&runs, &method.name(), 1, true)[0];
            assert!(best.mae.weights < 1e-3 && best.mae.means.iter().all(|&m| m < 1e-3), "{best:?}");
        }
    }

    #[test]
    fn small_bench_is_deterministic() {
        let protocol = BenchProtocol { n_datasets: 2, n_samples: 100, seed: 7, ..BenchProtocol::default() };
        let a = run_supplement_bench(&protocol).unwrap();
        let b = run_supplement_bench(&BenchProtocol { threads: 2, ..protocol.clone() }).unwrap();
        assert_eq!(bench_csv(&a), bench_csv(&b));
        assert_eq!(a.methods, b.methods);
        assert_eq!(a.methods.len(), 3);
        assert_eq!(a.runs.len(), 2 * 3 * 5);
        for t in &a.truths {
            let m: Vec<f64> = t.components().iter().map(|c| c.location()).collect();
            assert!(m.windows(2).all(|w| w[0] <= w[1]));
        }
        for s in &a.methods {
            assert!(s.best_by_mae.mean.iter().chain(&s.best_by_mae.sd).all(|&v| v >= 0.0));
            let tot = |v: &Summary| v.mean.iter().sum::<f64>();
            assert!(tot(&s.best_by_mae) <= tot(&s.best_by_elbo) + 1e-12);
        }
        let csv = bench_csv(&a);
        assert!(csv.starts_with("method,dataset,restart,mae_p,mae_t1,mae_t2,mae_t3,elbo\n"));
        assert_eq!(csv.lines().count(), 31);
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<BenchReport>(&json).unwrap(), a);
    }

    #[test]
    fn mean_scale_changes_truth_spread() {
        let v = BenchProtocol { seed: 1, ..BenchProtocol::default() }.draw_truth(0).unwrap();
        let s = BenchProtocol { seed: 1, mean_scale: MeanScale::StdDev, ..BenchProtocol::default() }.draw_truth(0).unwrap();
        for (a, b) in v.components().iter().zip(s.components()) {
            assert!((b.location() - a.location() * 10f64.sqrt()).abs() < 1e-12);
        }
    }

    fn div_cfg(n_grid: Vec<usize>) -> DivergenceConfig {
        DivergenceConfig {
            n_grid,
            truth: gm(&[0.4, 0.6], &[-3.0, 3.0]),
            alpha: 0.5,
            mc_samples: 2000,
            replicates: 2,
            prior_weight_concentration: 1.0,
            prior_scale: 10.0,
            restarts: 2,
            init: Init::RandomResponsibilities,
            seed: 4,
            threads: 1,
        }
    }

    #[test]
    fn injected_truth_has_zero_divergence() {
        let t = gm(&[0.4, 0.6], &[-3.0, 3.0]);
        let e = predictive_divergence(&t, &t, 0.5, 1000, 1).unwrap();
        assert_eq!(e.estimate, 0.0);
        let rate = rate_gaussian_known_var(100, 2, 1.0, 10.0, &[-3.0, 3.0]).unwrap();
        assert!(e.estimate <= risk_bound(0.5, 2, rate).unwrap().unwrap());
    }

    #[test]
    fn divergence_rows_use_rates_module() {
        let rows = run_divergence_experiment(&div_cfg(vec![50, 200, 800])).unwrap();
        for r in &rows {
            let rate = rate_gaussian_known_var(r.n as u64, 2, 1.0, 10.0, &[-3.0, 3.0]).unwrap();
            assert_eq!(r.rate, rate);
            assert_eq!(r.bound, 3.0 * 4.0 * rate);
            assert!(r.bound > 0.0);
            assert!(r.divergence.is_finite() && r.std_error >= 0.0);
        }
        assert!(rows.windows(2).all(|w| w[1].bound < w[0].bound));
        let csv = divergence_csv(&rows);
        assert_eq!(csv.lines().count(), 4);
        assert_eq!(rows, run_divergence_experiment(&div_cfg(vec![50, 200, 800])).unwrap());
    }

    #[test]
    fn categorical_divergence_sweep() {
        let truth = MixtureParams::multinomial(vec![0.5, 0.5], vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.2, 0.7]]).unwrap();
        let cfg = DivergenceConfig { truth, prior_scale: 1.0, ..div_cfg(vec![100]) };
        let rows = run_divergence_experiment(&cfg).unwrap();
        assert_eq!(rows[0].rate, crate::rates::rate_multinomial(100, 2, 3).unwrap());
    }

    #[test]
    fn sweep_rejects_alpha_one() {
        let cfg = DivergenceConfig { alpha: 1.0, ..div_cfg(vec![10]) };
        assert!(run_divergence_experiment(&cfg).is_err());
    }

    proptest! {
        #[test]
        fn mae_is_label_invariant(
            w in prop::collection::vec(0.01f64..1.0, 3),
            m in prop::collection::vec(-10.0f64..10.0, 3),
            e in prop::collection::vec(-10.0f64..10.0, 3),
            perm in prop::sample::select(vec![[0usize, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]]),
        ) {
            let s: f64 = w.iter().sum();
            let w: Vec<f64> = w.iter().map(|x| x / s).collect();
            let truth = gm(&w, &m);
            let est = gm(&[1.0 / 3.0; 3], &e);
            let a = mae(&est, &truth).unwrap();
            let b = mae(&est.permuted(&perm).unwrap(), &truth.permuted(&perm).unwrap()).unwrap();
            prop_assert!(a.weights >= 0.0);
            prop_assert_eq!(a, b);
        }
    }
}
