use fracvb::bench::{
    divergence_rate_inputs, predictive_divergence, run_divergence_experiment, run_supplement_bench, BenchProtocol,
    DivergenceConfig,
};
use fracvb::io::{format_dataset, parse_dataset};
use fracvb::mixture::sample_mixture;
use fracvb::rates::risk_bound;
use fracvb::{
    fit, select_k, ComponentFamily, ComponentPrior, Dataset, ElboKind, FitConfig, FitResult, Init, MixtureParams,
    ModelPriorWeights, PriorSpec,
};

fn three_cluster_truth() -> MixtureParams {
    MixtureParams::gaussian_known_variance(vec![0.25, 0.35, 0.4], vec![-7.0, 0.0, 7.0], 1.0).unwrap()
}

#[test]
fn simulate_write_parse_fit() {
    let truth = three_cluster_truth();
    let data = sample_mixture(&truth, 400, 1);
    let parsed = parse_dataset(&format_dataset(&data)).unwrap().unwrap();
    assert_eq!(parsed, data);

    let family = truth.family();
    let prior = PriorSpec::symmetric(1.0, ComponentPrior::gaussian_mean(10.0).unwrap(), 3).unwrap();
    let r = fit(&parsed, &prior, family, &FitConfig { restarts: 5, seed: 2, ..FitConfig::default() }).unwrap();
    assert!(r.converged);
    let mut means: Vec<f64> = r.state.point_estimate(family).unwrap().components().iter().map(|c| c.location()).collect();
    means.sort_by(f64::total_cmp);
    for (m, t) in means.iter().zip([-7.0, 0.0, 7.0]) {
        assert!((m - t).abs() < 0.3, "{means:?}");
    }

    let json = serde_json::to_string(&r).unwrap();
    let back: FitResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
}

#[test]
fn categorical_pipeline() {
    let truth = MixtureParams::multinomial(vec![0.5, 0.5], vec![vec![0.8, 0.1, 0.1], vec![0.1, 0.1, 0.8]]).unwrap();
    let data = sample_mixture(&truth, 300, 3);
    assert_eq!(parse_dataset(&format_dataset(&data)).unwrap().unwrap(), data);
    let family = ComponentFamily::Multinomial { categories: 3 };
    let prior = PriorSpec::symmetric(1.0, ComponentPrior::symmetric_dirichlet(1.0, 3).unwrap(), 2).unwrap();
    let r = fit(&data, &prior, family, &FitConfig { restarts: 3, ..FitConfig::default() }).unwrap();
    // Single-draw categorical mixtures only identify the marginal pmf.
    let est = r.state.point_estimate(family).unwrap();
    for v in 1..=3 {
        let p_est = fracvb::mixture::log_mixture_density(&est, fracvb::Observation::Category(v)).unwrap().exp();
        let p_true = fracvb::mixture::log_mixture_density(&truth, fracvb::Observation::Category(v)).unwrap().exp();
        assert!((p_est - p_true).abs() < 0.06, "category {v}: {p_est} vs {p_true}");
    }
}

#[test]
fn selection_is_deterministic_and_finds_three_clusters() {
    let truth = three_cluster_truth();
    let data = sample_mixture(&truth, 400, 4);
    let family = truth.family();
    let cfg = FitConfig { restarts: 3, seed: 9, threads: 2, ..FitConfig::default() };
    let run = || {
        select_k(
            &data,
            |k| PriorSpec::symmetric(1.0, ComponentPrior::gaussian_mean(10.0)?, k),
            family,
            5,
            &ModelPriorWeights::Geometric,
            &cfg,
            ElboKind::Surrogate,
        )
        .unwrap()
    };
    let a = run();
    assert_eq!(a.selected_k, 3);
    let b = run();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn thread_count_does_not_change_fits() {
    let data = sample_mixture(&three_cluster_truth(), 200, 5);
    let prior = PriorSpec::symmetric(1.0, ComponentPrior::nig(10.0, 1.0).unwrap(), 3).unwrap();
    let family = ComponentFamily::GaussianUnknownVar;
    let base = FitConfig { restarts: 4, seed: 6, init: Init::KMeansLike, ..FitConfig::default() };
    let one = fit(&data, &prior, family, &base).unwrap();
    let four = fit(&data, &prior, family, &FitConfig { threads: 4, ..base }).unwrap();
    assert_eq!(one, four);
}

#[test]
fn bench_is_bit_deterministic() {
    let p = BenchProtocol { n_datasets: 2, n_samples: 150, runs_per_dataset: 2, seed: 3, ..BenchProtocol::default() };
    let a = run_supplement_bench(&p).unwrap();
    let b = run_supplement_bench(&BenchProtocol { threads: 2, ..p }).unwrap();
    assert_eq!(serde_json::to_string(&a.runs).unwrap(), serde_json::to_string(&b.runs).unwrap());
    for m in &a.methods {
        assert!(m.best_by_mae.mean.iter().all(|&v| v >= 0.0));
    }
    for t in &a.truths {
        let locs: Vec<f64> = t.components().iter().map(|c| c.location()).collect();
        assert!(locs.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn divergence_bound_column_is_the_rate_bound() {
    let cfg = DivergenceConfig {
        n_grid: vec![50, 200, 800],
        truth: MixtureParams::gaussian_known_variance(vec![0.5, 0.5], vec![-3.0, 3.0], 1.0).unwrap(),
        alpha: 0.5,
        mc_samples: 1000,
        replicates: 2,
        prior_weight_concentration: 1.0,
        prior_scale: 10.0,
        restarts: 2,
        init: Init::RandomResponsibilities,
        seed: 1,
        threads: 1,
    };
    let rows = run_divergence_experiment(&cfg).unwrap();
    let inputs = divergence_rate_inputs(&cfg).unwrap();
    for r in &rows {
        let rate = inputs.rate(r.n as u64, 2).unwrap();
        assert_eq!(r.rate, rate);
        assert_eq!(r.bound, risk_bound(0.5, 2, rate).unwrap().unwrap());
        assert!(r.bound > 0.0);
    }
    assert!(rows.windows(2).all(|w| w[1].bound < w[0].bound));
}

#[test]
fn divergence_of_truth_to_itself_vanishes() {
    let truth = three_cluster_truth();
    let d = predictive_divergence(&truth, &truth, 0.5, 5000, 1).unwrap();
    assert!(d.estimate.abs() < 1e-12 && d.std_error < 1e-12, "{d:?}");
}

#[test]
fn empty_dataset_fit_and_format() {
    let data = Dataset::empty(fracvb::DataKind::Real);
    assert_eq!(format_dataset(&data), "kind=real\n");
    let prior = PriorSpec::symmetric(1.0, ComponentPrior::gaussian_mean(1.0).unwrap(), 2).unwrap();
    let family = ComponentFamily::GaussianKnownVar { component_variance: 1.0 };
    let r = fit(&data, &prior, family, &FitConfig::default()).unwrap();
    assert_eq!(r.surrogate_elbo, 0.0);
}
