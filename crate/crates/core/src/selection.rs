//! Choosing the number of components by the penalized ELBO
//! `L(K) − log(1/π_K)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cavi::{exact_elbo_mc, fit, FitConfig, FitResult};
use crate::error::{Error, Result};
use crate::mixture::{ComponentFamily, Dataset};
use crate::prior::PriorSpec;
use crate::rng::derive_seed;

/// Prior weights `π_K` over model sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelPriorWeights {
    /// `π_K = 2^{−K}`.
    Geometric,
    /// `π_K = 1/Kmax` for K in 1..=Kmax.
    UniformUpTo(usize),
    /// `π_K = weights[K − 1]`.
    Custom(Vec<f64>),
}

impl ModelPriorWeights {
    pub fn weight(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::Config("model sizes start at K = 1".into()));
        }
        let w = match self {
            ModelPriorWeights::Geometric => 0.5f64.powi(k as i32),
            ModelPriorWeights::UniformUpTo(kmax) => {
                if k > *kmax {
                    return Err(Error::Config(format!("K = {k} exceeds the uniform range 1..={kmax}")));
                }
                1.0 / *kmax as f64
            }
            ModelPriorWeights::Custom(ws) => {
                let total: f64 = ws.iter().sum();
                if total > 1.0 + 1e-12 {
                    return Err(Error::Config(format!("custom model weights sum to {total} > 1")));
                }
                *ws.get(k - 1).ok_or_else(|| Error::Config(format!("no custom model weight for K = {k}")))?
            }
        };
        if !(w > 0.0 && w <= 1.0) {
            return Err(Error::Config(format!("model weight for K = {k} must lie in (0, 1], got {w}")));
        }
        Ok(w)
    }

    /// `log(1/π_K)`.
    pub fn penalty(&self, k: usize) -> Result<f64> {
        Ok((1.0 / self.weight(k)?).ln())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub per_k: BTreeMap<usize, FitResult>,
    /// `L(K)` as used in the score.
    pub elbos: BTreeMap<usize, f64>,
    /// `log(1/π_K)`.
    pub penalties: BTreeMap<usize, f64>,
    pub scores: BTreeMap<usize, f64>,
    pub selected_k: usize,
    pub model_weights: ModelPriorWeights,
    /// Whether `L(K)` is the Monte-Carlo ELBO rather than the surrogate.
    pub monte_carlo_elbo: bool,
}

/// Which quantity plays the role of `L(K)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElboKind {
    Surrogate,
    MonteCarlo { samples: usize },
}

/// Scores and argmax for precomputed `L(K)` values. Ties go to the smaller K.
pub fn select_from_elbos(
    elbos: &BTreeMap<usize, f64>,
    weights: &ModelPriorWeights,
) -> Result<(BTreeMap<usize, f64>, BTreeMap<usize, f64>, usize)> {
    if elbos.is_empty() {
        return Err(Error::Config("no candidate model sizes".into()));
    }
    let mut penalties = BTreeMap::new();
    let mut scores = BTreeMap::new();
    let mut best: Option<(usize, f64)> = None;
    for (&k, &l) in elbos {
        let pen = weights.penalty(k)?;
        let score = l - pen;
        if score.is_nan() {
            return Err(Error::Invariant(format!("score for K = {k} is NaN")));
        }
        penalties.insert(k, pen);
        scores.insert(k, score);
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((k, score));
        }
    }
    Ok((penalties, scores, best.expect("non-empty").0))
}

/// Fit K = 1..=kmax and pick the maximizer of `L(K) − log(1/π_K)`.
pub fn select_k<F>(
    data: &Dataset,
    prior_factory: F,
    family: ComponentFamily,
    kmax: usize,
    weights: &ModelPriorWeights,
    config: &FitConfig,
    elbo: ElboKind,
) -> Result<SelectionResult>
where
    F: Fn(usize) -> Result<PriorSpec>,
{
    if kmax == 0 {
        return Err(Error::Config("Kmax must be at least 1".into()));
    }
    let mut per_k = BTreeMap::new();
    let mut elbos = BTreeMap::new();
    for k in 1..=kmax {
        let wrap = |e: Error| Error::FitFailed { k, source: Box::new(e) };
        let prior = prior_factory(k).map_err(wrap)?;
        if prior.k() != k {
            return Err(wrap(Error::Shape(format!("prior factory returned K = {}", prior.k()))));
        }
        let cfg = FitConfig { seed: derive_seed(config.seed, &[k as u64]), ..config.clone() };
        let mut result = fit(data, &prior, family, &cfg).map_err(wrap)?;
        let l = match elbo {
            ElboKind::Surrogate => result.surrogate_elbo,
            ElboKind::MonteCarlo { samples } => {
                let mc = exact_elbo_mc(
                    &result.state,
                    data,
                    &prior,
                    family,
                    cfg.alpha,
                    samples,
                    derive_seed(cfg.seed, &[u64::MAX]),
                )
                .map_err(wrap)?;
                result.exact_elbo_mc = Some(mc);
                mc.estimate
            }
        };
        elbos.insert(k, l);
        per_k.insert(k, result);
    }
    let (penalties, scores, selected_k) = select_from_elbos(&elbos, weights)?;
    Ok(SelectionResult {
        per_k,
        elbos,
        penalties,
        scores,
        selected_k,
        model_weights: weights.clone(),
        monte_carlo_elbo: matches!(elbo, ElboKind::MonteCarlo { .. }),
    })
}

/// Right-hand side of the model-selection oracle inequality:
/// `α/(1−α)·kl + (1+α)/(1−α)·2K·r + log(1/π_K)/(n(1−α))`.
pub fn selection_bound(k: usize, rate: f64, alpha: f64, model_weight: f64, kl_term: f64, n: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(model_weight > 0.0 && model_weight <= 1.0) {
        return Err(Error::Domain(format!("model weight must lie in (0, 1], got {model_weight}")));
    }
    if k == 0 || n == 0 {
        return Err(Error::Domain("K and n must be positive".into()));
    }
    if !(rate >= 0.0) || !(kl_term >= 0.0) {
        return Err(Error::Domain("rate and KL term must be non-negative".into()));
    }
    let c = 1.0 - alpha;
    Ok(alpha / c * kl_term + (1.0 + alpha) / c * 2.0 * k as f64 * rate + (1.0 / model_weight).ln() / (n as f64 * c))
}
