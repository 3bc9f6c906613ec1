//! Convergence-rate calculators `r_{n,K}` for each prior family and the
//! resulting risk bound `(1+α)/(1−α)·2K·r_{n,K}`.
//!
//! Every rate is the maximum of a weight branch `4 log(nK)/n` and a component
//! branch; for K = 1 the weight branch is absent.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_nk(n: u64, k: usize) -> Result<(f64, f64)> {
    if n == 0 || k == 0 {
        return Err(Error::Domain(format!("rates need n >= 1 and K >= 1, got n = {n}, K = {k}")));
    }
    Ok((n as f64, k as f64))
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_len(k: usize, len: usize) -> Result<()> {
    if len != k {
        return Err(Error::Shape(format!("expected {k} true parameters, got {len}")));
    }
    Ok(())
}

/// `4 log(nK)/n`, or 0 when K = 1.
pub fn rate_dirichlet(n: u64, k: usize) -> Result<f64> {
    let (nf, kf) = check_nk(n, k)?;
    Ok(if k == 1 { 0.0 } else { 4.0 * (nf * kf).ln() / nf })
}

/// The two branches of a rate; `rate()` is their maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branches {
    /// `None` when K = 1.
    pub weight: Option<f64>,
    pub component: f64,
}

impl Branches {
    pub fn rate(&self) -> f64 {
        match self.weight {
            Some(w) => w.max(self.component),
            None => self.component,
        }
    }
}

fn weight_branch(n: f64, k: usize, scale: f64) -> Option<f64> {
    (k > 1).then(|| scale * (n * k as f64).ln() / n)
}

fn max_bracket(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::NEG_INFINITY, f64::max)
}

/// Input parameters of a rate, one variant per prior family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RateInputs {
    /// Weight branch only.
    Dirichlet,
    Multinomial { categories: usize },
    GaussianKnownVar { component_variance: f64, prior_variance: f64, true_means: Vec<f64> },
    GaussianNig { prior_variance: f64, gamma2: f64, true_means: Vec<f64>, true_variances: Vec<f64> },
    GaussianFactorized { prior_variance: f64, gamma2: f64, true_means: Vec<f64>, true_variances: Vec<f64> },
    MisspecifiedGaussian { prior_variance: f64, mean_bound: f64 },
}

impl RateInputs {
    pub fn branches(&self, n: u64, k: usize) -> Result<Branches> {
        let (nf, kf) = check_nk(n, k)?;
        match self {
            RateInputs::Dirichlet => Ok(Branches { weight: weight_branch(nf, k, 4.0), component: 0.0 }),
            RateInputs::Multinomial { categories } => {
                if *categories == 0 {
                    return Err(Error::Domain("category count must be >= 1".into()));
                }
                let v = *categories as f64;
                Ok(Branches {
                    weight: weight_branch(nf, k, 8.0 * kf),
                    component: 8.0 * kf * v * (nf * v).ln() / nf,
                })
            }
            RateInputs::GaussianKnownVar { component_variance, prior_variance, true_means } => {
                let v2 = positive("component variance", *component_variance)?;
                let p2 = positive("prior variance", *prior_variance)?;
                check_len(k, true_means.len())?;
                let bracket = max_bracket(true_means.iter().map(|&mu| {
                    0.5 * (nf / 2.0).ln() + v2 / (nf * p2) + 0.5 * (p2 / v2).ln() + mu * mu / (2.0 * p2) - 0.5
                }));
                Ok(Branches { weight: weight_branch(nf, k, 4.0), component: bracket / nf })
            }
            RateInputs::GaussianNig { prior_variance, gamma2, true_means, true_variances } => {
                let p2 = positive("prior variance", *prior_variance)?;
                let g2 = positive("gamma^2", *gamma2)?;
                check_len(k, true_means.len())?;
                check_len(k, true_variances.len())?;
                let mut brackets = Vec::with_capacity(k);
                for (&mu, &s2) in true_means.iter().zip(true_variances) {
                    let s2 = positive("true variance", s2)?;
                    brackets.push(
                        2.0 * nf.ln() + 0.5 * p2.ln() + 1.0 / (2.0 * nf * p2) + mu * mu / (2.0 * s2 * p2) + (s2 / g2).ln()
                            + g2 / s2
                            - 0.5 * (2.0 * PI).ln(),
                    );
                }
                Ok(Branches { weight: weight_branch(nf, k, 4.0), component: max_bracket(brackets.into_iter()) / nf })
            }
            RateInputs::GaussianFactorized { prior_variance, gamma2, true_means, true_variances } => {
                let p2 = positive("prior variance", *prior_variance)?;
                let g2 = positive("gamma^2", *gamma2)?;
                check_len(k, true_means.len())?;
                check_len(k, true_variances.len())?;
                let mut brackets = Vec::with_capacity(k);
                for (&mu, &s2) in true_means.iter().zip(true_variances) {
                    let s2 = positive("true variance", s2)?;
                    brackets.push(
                        2.0 * nf.ln() + 0.5 * p2.ln() + s2 / (2.0 * nf * p2) + mu * mu / (2.0 * p2)
                            + 0.5 * (s2 / (g2 * g2)).ln()
                            + g2 / s2
                            - 0.5 * (2.0 * PI).ln(),
                    );
                }
                Ok(Branches { weight: weight_branch(nf, k, 4.0), component: max_bracket(brackets.into_iter()) / nf })
            }
            RateInputs::MisspecifiedGaussian { prior_variance, mean_bound } => {
                let p2 = positive("prior variance", *prior_variance)?;
                if !(mean_bound >= &0.0) {
                    return Err(Error::Domain(format!("mean bound must be >= 0, got {mean_bound}")));
                }
                let l = *mean_bound;
                let bracket = 0.5 * (nf / 2.0).ln() + 1.0 / (nf * p2) + 0.5 * p2.ln() + l * l / (2.0 * p2) - 0.5;
                Ok(Branches { weight: weight_branch(nf, k, 4.0), component: bracket / nf })
            }
        }
    }

    pub fn rate(&self, n: u64, k: usize) -> Result<f64> {
        Ok(self.branches(n, k)?.rate())
    }
}

/// `max(8KV log(nV)/n, 8K log(nK)/n)`.
pub fn rate_multinomial(n: u64, k: usize, categories: usize) -> Result<f64> {
    RateInputs::Multinomial { categories }.rate(n, k)
}

pub fn rate_gaussian_known_var(
    n: u64,
    k: usize,
    component_variance: f64,
    prior_variance: f64,
    true_means: &[f64],
) -> Result<f64> {
    RateInputs::GaussianKnownVar { component_variance, prior_variance, true_means: true_means.to_vec() }.rate(n, k)
}

pub fn rate_gaussian_nig(
    n: u64,
    k: usize,
    prior_variance: f64,
    gamma2: f64,
    true_means: &[f64],
    true_variances: &[f64],
) -> Result<f64> {
    RateInputs::GaussianNig {
        prior_variance,
        gamma2,
        true_means: true_means.to_vec(),
        true_variances: true_variances.to_vec(),
    }
    .rate(n, k)
}

pub fn rate_gaussian_factorized(
    n: u64,
    k: usize,
    prior_variance: f64,
    gamma2: f64,
    true_means: &[f64],
    true_variances: &[f64],
) -> Result<f64> {
    RateInputs::GaussianFactorized {
        prior_variance,
        gamma2,
        true_means: true_means.to_vec(),
        true_variances: true_variances.to_vec(),
    }
    .rate(n, k)
}

/// Rate when the truth is any distribution whose mean parameters lie in
/// `[−L, L]`.
pub fn rate_misspecified_gaussian(n: u64, k: usize, prior_variance: f64, mean_bound: f64) -> Result<f64> {
    RateInputs::MisspecifiedGaussian { prior_variance, mean_bound }.rate(n, k)
}

/// `(1+α)/(1−α)·2K·r`; `None` for α = 1 where no bound holds.
pub fn risk_bound(alpha: f64, k: usize, rate: f64) -> Result<Option<f64>> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok((alpha < 1.0).then(|| (1.0 + alpha) / (1.0 - alpha) * 2.0 * k as f64 * rate))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub n: u64,
    pub k: usize,
    pub alpha: f64,
    pub r_nk: f64,
    pub dirichlet_branch: Option<f64>,
    pub component_branch: f64,
    pub bound: Option<f64>,
    pub inputs: RateInputs,
}

pub fn rate_report(inputs: &RateInputs, n: u64, k: usize, alpha: f64) -> Result<RateReport> {
    let b = inputs.branches(n, k)?;
    let r = b.rate();
    Ok(RateReport {
        n,
        k,
        alpha,
        r_nk: r,
        dirichlet_branch: b.weight,
        component_branch: b.component,
        bound: risk_bound(alpha, k, r)?,
        inputs: inputs.clone(),
    })
}

/// Smallest n ≥ 1 from which the weight branch of the known-variance rate is
/// at least the component branch. Past this n the weight branch stays on top.
pub fn known_variance_crossover(k: usize, component_variance: f64, prior_variance: f64, true_means: &[f64]) -> Result<u64> {
    if k < 2 {
        return Err(Error::Domain("the weight branch only exists for K >= 2".into()));
    }
    let inputs = RateInputs::GaussianKnownVar { component_variance, prior_variance, true_means: true_means.to_vec() };
    // n·(weight − component) is increasing in n, so bisect on its sign.
    let weight_wins = |n: u64| -> Result<bool> {
        let b = inputs.branches(n, k)?;
        Ok(b.weight.expect("K >= 2") >= b.component)
    };
    if weight_wins(1)? {
        return Ok(1);
    }
    let mut hi = 2u64;
    while !weight_wins(hi)? {
        hi = hi.checked_mul(2).ok_or_else(|| Error::Domain("crossover beyond u64 range".into()))?;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if weight_wins(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
