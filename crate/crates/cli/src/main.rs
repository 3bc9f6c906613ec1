use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fracvb::bench::{
    bench_csv, divergence_csv, run_divergence_experiment, run_supplement_bench, BenchProtocol, BenchReport,
    DivergenceConfig, DivergenceRow, MeanScale,
};
use fracvb::cavi::exact_elbo_mc;
use fracvb::io::{format_dataset, parse_dataset};
use fracvb::mixture::sample_mixture;
use fracvb::rates::{rate_report, RateInputs, RateReport};
use fracvb::rng::derive_seed;
use fracvb::selection::select_from_elbos;
use fracvb::{
    fit, select_k, ComponentFamily, ComponentParams, ComponentPrior, DataKind, Dataset, ElboKind, FitConfig,
    FitResult, GaussianParams, Init, MixtureParams, ModelPriorWeights, PriorSpec, SelectionResult,
};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] fracvb::Error),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Core(e) => core_code(e),
            CliError::Internal(_) => 4,
        }
    }
}

fn core_code(e: &fracvb::Error) -> u8 {
    use fracvb::Error::*;
    match e {
        Domain(_) | Shape(_) | Config(_) | Parse { .. } => 2,
        DegenerateObservation { .. } | Invariant(_) => 3,
        FitFailed { source, .. } => core_code(source),
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "fracvb", version, about = "Tempered variational Bayes for finite mixtures")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Tempering exponent in (0, 1]; 1 gives standard variational Bayes.
    #[arg(long, global = true, default_value_t = 1.0)]
    alpha: f64,
    /// Master seed. The MIX_SEED environment variable takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Relative change of the objective below which a fit stops.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 500)]
    max_sweeps: usize,
    #[arg(long, global = true, default_value_t = 5)]
    restarts: usize,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Human-readable table instead of JSON/CSV.
    #[arg(long, global = true)]
    pretty: bool,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum FamilyArg {
    Multinomial,
    GaussKnown,
    GaussNig,
    GaussFactorized,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum InitArg {
    Random,
    Kmeans,
    PriorDraw,
}

impl From<InitArg> for Init {
    fn from(i: InitArg) -> Self {
        match i {
            InitArg::Random => Init::RandomResponsibilities,
            InitArg::Kmeans => Init::KMeansLike,
            InitArg::PriorDraw => Init::PriorDraw,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Known component variance for gauss-known.
    #[arg(long, default_value_t = 1.0)]
    component_variance: f64,
    /// Number of categories when the data file is empty.
    #[arg(long)]
    categories: Option<usize>,
    /// Prior variance of the component means.
    #[arg(long, default_value_t = 10.0)]
    prior_v2: f64,
    /// Scale of the inverse-gamma variance prior.
    #[arg(long, default_value_t = 1.0)]
    prior_gamma2: f64,
    /// Symmetric Dirichlet concentration of the weight prior.
    #[arg(long, default_value_t = 1.0)]
    weight_conc: f64,
    /// Symmetric Dirichlet concentration of the category prior.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, value_enum, default_value_t = InitArg::Random)]
    init: InitArg,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum WeightsArg {
    Geometric,
    Uniform,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum RateFamilyArg {
    Dirichlet,
    Multinomial,
    GaussKnown,
    GaussNig,
    GaussFactorized,
    Misspecified,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum MeanScaleArg {
    Variance,
    StdDev,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a K-component mixture.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        k: usize,
        /// Also estimate the ELBO by Monte Carlo with this many draws.
        #[arg(long, default_value_t = 0)]
        mc_samples: usize,
    },
    /// Choose K by the penalized ELBO.
    Select {
        /// Dataset to fit; not needed with --scores.
        #[arg(long, required_unless_present = "scores")]
        data: Option<PathBuf>,
        #[command(flatten)]
        model: Option<ModelArgsOpt>,
        #[arg(long, default_value_t = 10)]
        kmax: usize,
        #[arg(long, value_enum, default_value_t = WeightsArg::Geometric)]
        model_weights: WeightsArg,
        /// JSON object mapping K to a precomputed L(K); skips fitting.
        #[arg(long)]
        scores: Option<PathBuf>,
        /// Use the Monte-Carlo ELBO with this many draws instead of the surrogate.
        #[arg(long, default_value_t = 0)]
        mc_samples: usize,
    },
    /// Sample a dataset from a mixture.
    Simulate {
        #[arg(long)]
        n: usize,
        /// Comma-separated mixture weights.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        weights: Vec<f64>,
        /// Comma-separated component means (Gaussian mixtures).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        means: Vec<f64>,
        /// Comma-separated component variances; defaults to --component-variance.
        #[arg(long, value_delimiter = ',')]
        variances: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        component_variance: f64,
        /// Category probabilities, one component per `;`-separated group.
        #[arg(long)]
        thetas: Option<String>,
    },
    /// Reproduce the three-method MAE study.
    Bench {
        #[arg(long, default_value_t = 10)]
        datasets: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1")]
        alphas: Vec<f64>,
        #[arg(long)]
        no_em: bool,
        /// How the spread "10" of the true means is read.
        #[arg(long, value_enum, default_value_t = MeanScaleArg::Variance)]
        mean_scale: MeanScaleArg,
        #[arg(long, default_value_t = 10.0)]
        prior_v2: f64,
        #[arg(long, value_enum, default_value_t = InitArg::Random)]
        init: InitArg,
        /// Also write the per-run CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Evaluate a convergence rate and its risk bound.
    Rates {
        #[arg(long, value_enum)]
        family: RateFamilyArg,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        categories: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        component_variance: f64,
        #[arg(long, default_value_t = 1.0)]
        prior_v2: f64,
        #[arg(long, default_value_t = 1.0)]
        prior_gamma2: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        true_means: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        true_variances: Vec<f64>,
        /// Bound L on the absolute true means for the misspecified rate.
        #[arg(long, default_value_t = 0.0)]
        mean_bound: f64,
        /// Write a CSV of the rate over these sample sizes.
        #[arg(long)]
        sweep_csv: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000,10000,100000")]
        sweep_n: Vec<u64>,
    },
    /// Rényi divergence of fitted predictives to a known truth, over n.
    Divergence {
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
        n_grid: Vec<usize>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        weights: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        means: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        component_variance: f64,
        #[arg(long, default_value_t = 10.0)]
        prior_v2: f64,
        #[arg(long, default_value_t = 10_000)]
        mc_samples: usize,
        #[arg(long, default_value_t = 5)]
        replicates: usize,
    },
}

/// Model flags for `select`, optional because `--scores` needs none.
#[derive(Args, Debug, Clone)]
struct ModelArgsOpt {
    #[arg(long, value_enum, required = false)]
    family: Option<FamilyArg>,
    #[arg(long, default_value_t = 1.0)]
    component_variance: f64,
    #[arg(long)]
    categories: Option<usize>,
    #[arg(long, default_value_t = 10.0)]
    prior_v2: f64,
    #[arg(long, default_value_t = 1.0)]
    prior_gamma2: f64,
    #[arg(long, default_value_t = 1.0)]
    weight_conc: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, value_enum, default_value_t = InitArg::Random)]
    init: InitArg,
}

impl ModelArgsOpt {
    fn into_model(self) -> CliResult<ModelArgs> {
        Ok(ModelArgs {
            family: self.family.ok_or_else(|| CliError::Input("--family is required to fit data".into()))?,
            component_variance: self.component_variance,
            categories: self.categories,
            prior_v2: self.prior_v2,
            prior_gamma2: self.prior_gamma2,
            weight_conc: self.weight_conc,
            beta: self.beta,
            init: self.init,
        })
    }
}

fn seed(common: &Common) -> CliResult<u64> {
    match std::env::var("MIX_SEED") {
        Ok(s) => s.trim().parse().map_err(|_| CliError::Input(format!("MIX_SEED `{s}` is not an unsigned integer"))),
        Err(_) => Ok(common.seed),
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn emit(common: &Common, text: &str) -> CliResult<()> {
    match &common.output {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(v: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Internal(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn write_side_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

/// Load the dataset and resolve the component family.
fn load_data(path: &Path, model: &ModelArgs) -> CliResult<(Dataset, ComponentFamily)> {
    let text = read_text(path)?;
    let parsed = parse_dataset(&text)?;
    let family = match model.family {
        FamilyArg::Multinomial => {
            let categories = match (&parsed, model.categories) {
                (Some(Dataset::Categorical { categories, .. }), _) => *categories,
                (None, Some(v)) => v,
                (None, None) => {
                    return Err(CliError::Input("empty data file: pass --categories for the multinomial family".into()))
                }
                (Some(Dataset::Real(_)), _) => {
                    return Err(CliError::Input("multinomial family needs a categorical data file".into()))
                }
            };
            ComponentFamily::Multinomial { categories }
        }
        FamilyArg::GaussKnown => ComponentFamily::GaussianKnownVar { component_variance: model.component_variance },
        FamilyArg::GaussNig | FamilyArg::GaussFactorized => ComponentFamily::GaussianUnknownVar,
    };
    let data = match parsed {
        Some(d) => d,
        None => Dataset::empty(match family {
            ComponentFamily::Multinomial { categories } => DataKind::Categorical { categories },
            _ => DataKind::Real,
        }),
    };
    data.check_family(family).map_err(|e| CliError::Input(format!("data does not fit the family: {e}")))?;
    Ok((data, family))
}

fn prior_for(model: &ModelArgs, family: ComponentFamily, k: usize) -> fracvb::Result<PriorSpec> {
    let comp = match (model.family, family) {
        (FamilyArg::Multinomial, ComponentFamily::Multinomial { categories }) => {
            ComponentPrior::symmetric_dirichlet(model.beta, categories)?
        }
        (FamilyArg::GaussKnown, _) => ComponentPrior::gaussian_mean(model.prior_v2)?,
        (FamilyArg::GaussNig, _) => ComponentPrior::nig(model.prior_v2, model.prior_gamma2)?,
        (FamilyArg::GaussFactorized, _) => ComponentPrior::factorized(model.prior_v2, model.prior_gamma2)?,
        _ => return Err(fracvb::Error::Config("family mismatch".into())),
    };
    PriorSpec::symmetric(model.weight_conc, comp, k)
}

fn fit_config(common: &Common, init: InitArg, seed: u64) -> FitConfig {
    FitConfig {
        alpha: common.alpha,
        rel_tol: common.tol,
        max_sweeps: common.max_sweeps,
        restarts: common.restarts,
        seed,
        init: init.into(),
        threads: common.threads,
        check_monotone: false,
    }
}

fn pretty_fit(r: &FitResult) -> String {
    let mut out = String::new();
    writeln!(out, "L_K_surrogate  {:.6}", r.surrogate_elbo).unwrap();
    if let Some(mc) = r.exact_elbo_mc {
        writeln!(out, "L_K_mc         {:.6} (se {:.6})", mc.estimate, mc.std_error).unwrap();
    }
    writeln!(out, "sweeps         {} (converged: {})", r.sweeps, r.converged).unwrap();
    let phi = r.state.weight_factor.concentration();
    let total: f64 = phi.iter().sum();
    writeln!(out, "{:>3}  {:>10}  factor", "j", "weight").unwrap();
    for (j, (p, f)) in phi.iter().zip(&r.state.component_factors).enumerate() {
        let est = match f.point_estimate() {
            ComponentParams::Categorical(t) => format!("{t:.4?}"),
            ComponentParams::Mean(m) => format!("mean {m:.4}"),
            ComponentParams::Gaussian(g) => format!("mean {:.4}, variance {:.4}", g.mean(), g.variance()),
        };
        writeln!(out, "{:>3}  {:>10.4}  {est}", j + 1, p / total).unwrap();
    }
    out
}

#[derive(Serialize)]
struct ScoresOnly {
    elbos: BTreeMap<usize, f64>,
    penalties: BTreeMap<usize, f64>,
    scores: BTreeMap<usize, f64>,
    selected_k: usize,
    model_weights: ModelPriorWeights,
}

fn pretty_scores(elbos: &BTreeMap<usize, f64>, pen: &BTreeMap<usize, f64>, scores: &BTreeMap<usize, f64>, sel: usize) -> String {
    let mut out = format!("{:>4}  {:>14}  {:>10}  {:>14}\n", "K", "L(K)", "penalty", "score");
    for (k, l) in elbos {
        let mark = if *k == sel { "  <-" } else { "" };
        writeln!(out, "{k:>4}  {l:>14.4}  {:>10.4}  {:>14.4}{mark}", pen[k], scores[k]).unwrap();
    }
    out
}

fn pretty_bench(r: &BenchReport) -> String {
    let mut out = String::from("method          MAE p            ");
    for j in 1..=r.protocol.k {
        write!(out, "MAE t{j:<12}").unwrap();
    }
    out.push('\n');
    for m in &r.methods {
        write!(out, "{:<16}", m.method).unwrap();
        for (mean, sd) in m.best_by_mae.mean.iter().zip(&m.best_by_mae.sd) {
            write!(out, "{:<17}", format!("{mean:.3}({sd:.3})")).unwrap();
        }
        out.push('\n');
    }
    out
}

fn pretty_rates(r: &RateReport) -> String {
    let mut out = String::new();
    writeln!(out, "n                 {}", r.n).unwrap();
    writeln!(out, "K                 {}", r.k).unwrap();
    match r.dirichlet_branch {
        Some(d) => writeln!(out, "dirichlet branch  {d:.10}").unwrap(),
        None => writeln!(out, "dirichlet branch  -").unwrap(),
    }
    writeln!(out, "component branch  {:.10}", r.component_branch).unwrap();
    writeln!(out, "r_nK              {:.10}", r.r_nk).unwrap();
    match r.bound {
        Some(b) => writeln!(out, "bound (alpha={})  {b:.10}", r.alpha).unwrap(),
        None => writeln!(out, "bound             - (alpha = 1)").unwrap(),
    }
    out
}

fn pretty_divergence(rows: &[DivergenceRow]) -> String {
    let mut out = format!("{:>8}  {:>12}  {:>10}  {:>12}  within\n", "n", "divergence", "se", "bound");
    for r in rows {
        writeln!(out, "{:>8}  {:>12.6}  {:>10.6}  {:>12.6}  {}", r.n, r.divergence, r.std_error, r.bound, r.within_bound)
            .unwrap();
    }
    out
}

fn gaussian_truth(weights: Vec<f64>, means: Vec<f64>, variances: &[f64], v2: f64) -> CliResult<MixtureParams> {
    if means.len() != weights.len() {
        return Err(CliError::Input(format!("{} weights but {} means", weights.len(), means.len())));
    }
    if variances.is_empty() {
        return Ok(MixtureParams::gaussian_known_variance(weights, means, v2)?);
    }
    if variances.len() != means.len() {
        return Err(CliError::Input(format!("{} means but {} variances", means.len(), variances.len())));
    }
    let comps = means.iter().zip(variances).map(|(&m, &v)| GaussianParams::new(m, v)).collect::<Result<Vec<_>, _>>()?;
    Ok(MixtureParams::gaussian(weights, comps)?)
}

fn run(cli: Cli) -> CliResult<()> {
    let common = cli.common;
    if !(common.alpha > 0.0 && common.alpha <= 1.0) {
        return Err(CliError::Input(format!("--alpha must lie in (0, 1], got {}", common.alpha)));
    }
    let seed = seed(&common)?;
    match cli.command {
        Command::Fit { data, model, k, mc_samples } => {
            if k == 0 {
                return Err(CliError::Input("--k must be at least 1".into()));
            }
            let (data, family) = load_data(&data, &model)?;
            let prior = prior_for(&model, family, k)?;
            let mut result = fit(&data, &prior, family, &fit_config(&common, model.init, seed))?;
            if mc_samples > 0 {
                result.exact_elbo_mc = Some(exact_elbo_mc(
                    &result.state,
                    &data,
                    &prior,
                    family,
                    common.alpha,
                    mc_samples,
                    derive_seed(seed, &[u64::MAX]),
                )?);
            }
            emit(&common, &if common.pretty { pretty_fit(&result) } else { json(&result)? })
        }
        Command::Select { data, model, kmax, model_weights, scores, mc_samples } => {
            if kmax == 0 {
                return Err(CliError::Input("--kmax must be at least 1".into()));
            }
            let weights = match model_weights {
                WeightsArg::Geometric => ModelPriorWeights::Geometric,
                WeightsArg::Uniform => ModelPriorWeights::UniformUpTo(kmax),
            };
            if let Some(path) = scores {
                let text = read_text(&path)?;
                let elbos: BTreeMap<usize, f64> = serde_json::from_str(&text)
                    .map_err(|e| CliError::Input(format!("bad scores file {}: {e}", path.display())))?;
                let (penalties, scores, selected_k) = select_from_elbos(&elbos, &weights)?;
                let text = if common.pretty {
                    pretty_scores(&elbos, &penalties, &scores, selected_k)
                } else {
                    json(&ScoresOnly { elbos, penalties, scores, selected_k, model_weights: weights })?
                };
                return emit(&common, &text);
            }
            let model = model
                .ok_or_else(|| CliError::Input("--family is required to fit data".into()))?
                .into_model()?;
            let path = data.expect("clap requires --data without --scores");
            let (data, family) = load_data(&path, &model)?;
            let cfg = fit_config(&common, model.init, seed);
            let elbo = if mc_samples > 0 { ElboKind::MonteCarlo { samples: mc_samples } } else { ElboKind::Surrogate };
            let result: SelectionResult =
                select_k(&data, |k| prior_for(&model, family, k), family, kmax, &weights, &cfg, elbo)?;
            let text = if common.pretty {
                pretty_scores(&result.elbos, &result.penalties, &result.scores, result.selected_k)
            } else {
                json(&result)?
            };
            emit(&common, &text)
        }
        Command::Simulate { n, weights, means, variances, component_variance, thetas } => {
            let params = match thetas {
                Some(t) => {
                    let rows = t
                        .split(';')
                        .map(|g| {
                            g.split(',')
                                .map(|v| v.trim().parse::<f64>())
                                .collect::<Result<Vec<_>, _>>()
                                .map_err(|e| CliError::Input(format!("bad --thetas group `{g}`: {e}")))
                        })
                        .collect::<CliResult<Vec<_>>>()?;
                    MixtureParams::multinomial(weights, rows)?
                }
                None => gaussian_truth(weights, means, &variances, component_variance)?,
            };
            emit(&common, &format_dataset(&sample_mixture(&params, n, seed)))
        }
        Command::Bench { datasets, samples, k, runs, alphas, no_em, mean_scale, prior_v2, init, csv } => {
            let protocol = BenchProtocol {
                n_datasets: datasets,
                n_samples: samples,
                k,
                runs_per_dataset: runs,
                alphas,
                include_em: !no_em,
                mean_scale: match mean_scale {
                    MeanScaleArg::Variance => MeanScale::Variance,
                    MeanScaleArg::StdDev => MeanScale::StdDev,
                },
                prior_mean_variance: prior_v2,
                rel_tol: common.tol,
                max_sweeps: common.max_sweeps,
                init: init.into(),
                seed,
                threads: common.threads,
                ..BenchProtocol::default()
            };
            let report = run_supplement_bench(&protocol)?;
            if let Some(p) = csv {
                write_side_file(&p, &bench_csv(&report))?;
            }
            emit(&common, &if common.pretty { pretty_bench(&report) } else { json(&report)? })
        }
        Command::Rates {
            family,
            n,
            k,
            categories,
            component_variance,
            prior_v2,
            prior_gamma2,
            true_means,
            true_variances,
            mean_bound,
            sweep_csv,
            sweep_n,
        } => {
            let means = if true_means.is_empty() { vec![0.0; k] } else { true_means };
            let vars = if true_variances.is_empty() { vec![1.0; k] } else { true_variances };
            let inputs = match family {
                RateFamilyArg::Dirichlet => RateInputs::Dirichlet,
                RateFamilyArg::Multinomial => RateInputs::Multinomial {
                    categories: categories.ok_or_else(|| CliError::Input("--categories is required".into()))?,
                },
                RateFamilyArg::GaussKnown => {
                    RateInputs::GaussianKnownVar { component_variance, prior_variance: prior_v2, true_means: means }
                }
                RateFamilyArg::GaussNig => RateInputs::GaussianNig {
                    prior_variance: prior_v2,
                    gamma2: prior_gamma2,
                    true_means: means,
                    true_variances: vars,
                },
                RateFamilyArg::GaussFactorized => RateInputs::GaussianFactorized {
                    prior_variance: prior_v2,
                    gamma2: prior_gamma2,
                    true_means: means,
                    true_variances: vars,
                },
                RateFamilyArg::Misspecified => {
                    RateInputs::MisspecifiedGaussian { prior_variance: prior_v2, mean_bound }
                }
            };
            let report = rate_report(&inputs, n, k, common.alpha)?;
            if let Some(p) = sweep_csv {
                let mut out = String::from("n,dirichlet_branch,component_branch,r_nk,bound\n");
                for &m in &sweep_n {
                    let r = rate_report(&inputs, m, k, common.alpha)?;
                    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
                    writeln!(out, "{m},{},{},{},{}", opt(r.dirichlet_branch), r.component_branch, r.r_nk, opt(r.bound))
                        .unwrap();
                }
                write_side_file(&p, &out)?;
            }
            emit(&common, &if common.pretty { pretty_rates(&report) } else { json(&report)? })
        }
        Command::Divergence {
            n_grid,
            weights,
            means,
            component_variance,
            prior_v2,
            mc_samples,
            replicates,
        } => {
            let truth = gaussian_truth(weights, means, &[], component_variance)?;
            let cfg = DivergenceConfig {
                n_grid,
                truth,
                alpha: common.alpha,
                mc_samples,
                replicates,
                prior_weight_concentration: 1.0,
                prior_scale: prior_v2,
                restarts: common.restarts,
                init: Init::RandomResponsibilities,
                seed,
                threads: common.threads,
            };
            let rows = run_divergence_experiment(&cfg)?;
            emit(&common, &if common.pretty { pretty_divergence(&rows) } else { divergence_csv(&rows) })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Core(fracvb::Error::FitFailed { source, .. }) = &e {
                eprintln!("caused by: {source}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
