//! Distribution parameter records and closed-form divergences.
//!
//! All KL functions return `KL(first || second)`. Absolute-continuity
//! failures surface as `f64::INFINITY`, never as errors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::{ComponentParams, MixtureParams};
use crate::rng::{seeded, SeededRng};
use crate::special::{digamma_unchecked, log_gamma_unchecked};

/// Lower bound applied to variational variances.
pub const VARIANCE_FLOOR: f64 = 1e-12;

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {v}")))
    }
}

/// Univariate normal `N(mean, variance)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GaussianRaw")]
pub struct GaussianParams {
    mean: f64,
    variance: f64,
}

#[derive(Deserialize)]
struct GaussianRaw {
    mean: f64,
    variance: f64,
}

impl TryFrom<GaussianRaw> for GaussianParams {
    type Error = Error;
    fn try_from(r: GaussianRaw) -> Result<Self> {
        Self::new(r.mean, r.variance)
    }
}

impl GaussianParams {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        Ok(Self {
            mean: finite("mean", mean)?,
            variance: positive("variance", variance)?,
        })
    }

    /// Same as [`new`](Self::new) but clamps the variance to [`VARIANCE_FLOOR`].
    pub fn floored(mean: f64, variance: f64) -> Result<Self> {
        let variance = if variance.is_nan() { variance } else { variance.max(VARIANCE_FLOOR) };
        Self::new(mean, variance)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn log_density(&self, x: f64) -> f64 {
        let d = x - self.mean;
        -0.5 * (2.0 * std::f64::consts::PI * self.variance).ln() - d * d / (2.0 * self.variance)
    }
}

/// Dirichlet `D_d(c_1, ..., c_d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DirichletRaw")]
pub struct DirichletParams {
    concentration: Vec<f64>,
}

#[derive(Deserialize)]
struct DirichletRaw {
    concentration: Vec<f64>,
}

impl TryFrom<DirichletRaw> for DirichletParams {
    type Error = Error;
    fn try_from(r: DirichletRaw) -> Result<Self> {
        Self::new(r.concentration)
    }
}

impl DirichletParams {
    pub fn new(concentration: Vec<f64>) -> Result<Self> {
        if concentration.is_empty() {
            return Err(Error::Domain("Dirichlet needs dimension >= 1".into()));
        }
        for &c in &concentration {
            positive("Dirichlet concentration", c)?;
        }
        Ok(Self { concentration })
    }

    pub fn symmetric(value: f64, dim: usize) -> Result<Self> {
        Self::new(vec![value; dim])
    }

    pub fn concentration(&self) -> &[f64] {
        &self.concentration
    }

    pub fn dim(&self) -> usize {
        self.concentration.len()
    }

    pub fn total(&self) -> f64 {
        self.concentration.iter().sum()
    }

    /// E[p_j] = c_j / Σ c.
    pub fn mean(&self) -> Vec<f64> {
        let t = self.total();
        self.concentration.iter().map(|c| c / t).collect()
    }

    /// E[log p_j] = ψ(c_j) − ψ(Σ c).
    pub fn expected_log(&self) -> Vec<f64> {
        let dt = digamma_unchecked(self.total());
        self.concentration.iter().map(|&c| digamma_unchecked(c) - dt).collect()
    }

    /// Log-density at an interior simplex point.
    pub fn log_density(&self, p: &[f64]) -> f64 {
        let norm = log_gamma_unchecked(self.total())
            - self.concentration.iter().map(|&c| log_gamma_unchecked(c)).sum::<f64>();
        norm + self
            .concentration
            .iter()
            .zip(p)
            .map(|(&c, &x)| (c - 1.0) * x.ln())
            .sum::<f64>()
    }
}

/// Inverse-Gamma `IG(shape, scale)` with density ∝ y^{-shape-1} e^{-scale/y}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InverseGammaRaw")]
pub struct InverseGammaParams {
    shape: f64,
    scale: f64,
}

#[derive(Deserialize)]
struct InverseGammaRaw {
    shape: f64,
    scale: f64,
}

impl TryFrom<InverseGammaRaw> for InverseGammaParams {
    type Error = Error;
    fn try_from(r: InverseGammaRaw) -> Result<Self> {
        Self::new(r.shape, r.scale)
    }
}

impl InverseGammaParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        Ok(Self {
            shape: positive("inverse-gamma shape", shape)?,
            scale: positive("inverse-gamma scale", scale)?,
        })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// E[1/y] = shape / scale.
    pub fn mean_inverse(&self) -> f64 {
        self.shape / self.scale
    }

    /// E[log y] = log scale − ψ(shape).
    pub fn mean_log(&self) -> f64 {
        self.scale.ln() - digamma_unchecked(self.shape)
    }

    pub fn log_density(&self, y: f64) -> f64 {
        self.shape * self.scale.ln() - log_gamma_unchecked(self.shape)
            - (self.shape + 1.0) * y.ln()
            - self.scale / y
    }
}

/// Normal-Inverse-Gamma `NIG(location, precision_scale, shape, scale)`:
/// `y ~ IG(shape, scale)` and `x | y ~ N(location, y / precision_scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NigRaw")]
pub struct NigParams {
    location: f64,
    precision_scale: f64,
    shape: f64,
    scale: f64,
}

#[derive(Deserialize)]
struct NigRaw {
    location: f64,
    precision_scale: f64,
    shape: f64,
    scale: f64,
}

impl TryFrom<NigRaw> for NigParams {
    type Error = Error;
    fn try_from(r: NigRaw) -> Result<Self> {
        Self::new(r.location, r.precision_scale, r.shape, r.scale)
    }
}

impl NigParams {
    pub fn new(location: f64, precision_scale: f64, shape: f64, scale: f64) -> Result<Self> {
        Ok(Self {
            location: finite("NIG location", location)?,
            precision_scale: positive("NIG precision scale", precision_scale)?,
            shape: positive("NIG shape", shape)?,
            scale: positive("NIG scale", scale)?,
        })
    }

    pub fn location(&self) -> f64 {
        self.location
    }

    pub fn precision_scale(&self) -> f64 {
        self.precision_scale
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// E[1/y] under the variance marginal.
    pub fn mean_inverse_variance(&self) -> f64 {
        self.shape / self.scale
    }

    /// Marginal law of the variance.
    pub fn variance_marginal(&self) -> InverseGammaParams {
        InverseGammaParams { shape: self.shape, scale: self.scale }
    }

    pub fn log_density(&self, x: f64, y: f64) -> f64 {
        let cond = GaussianParams { mean: self.location, variance: y / self.precision_scale };
        cond.log_density(x) + self.variance_marginal().log_density(y)
    }
}

/// `KL(u || v)` between univariate Gaussians.
pub fn kl_gaussian(u: &GaussianParams, v: &GaussianParams) -> f64 {
    let d = v.mean - u.mean;
    0.5 * (v.variance / u.variance).ln() + u.variance / (2.0 * v.variance) + d * d / (2.0 * v.variance)
        - 0.5
}

/// `KL(a || b)` between Dirichlet distributions of equal dimension.
pub fn kl_dirichlet(a: &DirichletParams, b: &DirichletParams) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!(
            "Dirichlet dimensions differ: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let a0 = a.total();
    let b0 = b.total();
    let da0 = digamma_unchecked(a0);
    let mut kl = log_gamma_unchecked(a0) - log_gamma_unchecked(b0);
    for (&ai, &bi) in a.concentration.iter().zip(&b.concentration) {
        kl += log_gamma_unchecked(bi) - log_gamma_unchecked(ai);
        kl += (ai - bi) * (digamma_unchecked(ai) - da0);
    }
    Ok(kl)
}

/// `KL(p || q)` between Inverse-Gamma distributions.
pub fn kl_inverse_gamma(p: &InverseGammaParams, q: &InverseGammaParams) -> f64 {
    let (a1, b1, a2, b2) = (p.shape, p.scale, q.shape, q.scale);
    (a1 - a2) * digamma_unchecked(a1) + log_gamma_unchecked(a2) - log_gamma_unchecked(a1)
        + a2 * (b1 / b2).ln()
        + a1 * (b2 - b1) / b1
}

/// The two pieces of the NIG divergence: the expected conditional-Gaussian
/// KL under `p`'s variance marginal, and the KL between variance marginals.
pub fn kl_nig_parts(p: &NigParams, q: &NigParams) -> (f64, f64) {
    let d = q.location - p.location;
    let gaussian = 0.5 * (p.precision_scale / q.precision_scale).ln()
        + q.precision_scale / (2.0 * p.precision_scale)
        + q.precision_scale * d * d / 2.0 * p.mean_inverse_variance()
        - 0.5;
    (gaussian, kl_inverse_gamma(&p.variance_marginal(), &q.variance_marginal()))
}

/// `KL(p || q)` between Normal-Inverse-Gamma distributions.
pub fn kl_nig(p: &NigParams, q: &NigParams) -> f64 {
    let (g, ig) = kl_nig_parts(p, q);
    g + ig
}

/// `KL(p0 || p)` between categorical distributions on a common finite support.
pub fn kl_categorical(p0: &[f64], p: &[f64]) -> Result<f64> {
    if p0.len() != p.len() {
        return Err(Error::Shape(format!(
            "categorical lengths differ: {} vs {}",
            p0.len(),
            p.len()
        )));
    }
    let mut kl = 0.0;
    for (&a, &b) in p0.iter().zip(p) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Ok(f64::INFINITY);
        }
        kl += a * (a / b).ln();
    }
    Ok(kl)
}

/// Component-wise KL between two parameter records of the same family.
pub fn kl_component(a: &ComponentParams, b: &ComponentParams, known_variance: Option<f64>) -> Result<f64> {
    match (a, b) {
        (ComponentParams::Categorical(x), ComponentParams::Categorical(y)) => kl_categorical(x, y),
        (ComponentParams::Mean(x), ComponentParams::Mean(y)) => {
            let v = known_variance
                .ok_or_else(|| Error::Config("mean-only component without a known variance".into()))?;
            Ok(kl_gaussian(&GaussianParams::new(*x, v)?, &GaussianParams::new(*y, v)?))
        }
        (ComponentParams::Gaussian(x), ComponentParams::Gaussian(y)) => Ok(kl_gaussian(x, y)),
        _ => Err(Error::Config("component families differ".into())),
    }
}

/// Upper bound on `KL(mixture0 || mixture)`: the weight KL plus the
/// weight-averaged component KLs, pairing components by index.
pub fn mixture_kl_upper_bound(params0: &MixtureParams, params: &MixtureParams) -> Result<f64> {
    if params0.family() != params.family() {
        return Err(Error::Config(format!(
            "mixture families differ: {:?} vs {:?}",
            params0.family(),
            params.family()
        )));
    }
    if params0.k() != params.k() {
        return Err(Error::Shape(format!(
            "component counts differ: {} vs {}",
            params0.k(),
            params.k()
        )));
    }
    let known = params0.family().known_variance();
    let mut total = kl_categorical(params0.weights(), params.weights())?;
    for ((w0, c0), c) in params0.weights().iter().zip(params0.components()).zip(params.components()) {
        if *w0 == 0.0 {
            continue;
        }
        total += w0 * kl_component(c0, c, known)?;
    }
    Ok(total)
}

/// Point estimate with its Monte-Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Monte-Carlo estimate of the Rényi divergence `D_alpha(P || Q)` by sampling
/// from `P`: `(alpha-1)^{-1} log E_P[(p/q)^{alpha-1}]`.
///
/// The standard error comes from the delta method on the sample mean of the
/// likelihood-ratio powers.
pub fn renyi_divergence_mc<T, LP, LQ, S>(
    log_p: LP,
    log_q: LQ,
    mut sample_p: S,
    alpha: f64,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate>
where
    LP: Fn(&T) -> f64,
    LQ: Fn(&T) -> f64,
    S: FnMut(&mut SeededRng) -> T,
{
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("Renyi order must lie in (0, 1), got {alpha}")));
    }
    if n_samples == 0 {
        return Err(Error::Domain("Renyi estimator needs at least one sample".into()));
    }
    let mut rng = seeded(seed);
    let t: Vec<f64> = (0..n_samples)
        .map(|_| {
            let x = sample_p(&mut rng);
            let lp = log_p(&x);
            let lq = log_q(&x);
            if lq == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                (alpha - 1.0) * (lp - lq)
            }
        })
        .collect();
    let max = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Ok(McEstimate { estimate: f64::INFINITY, std_error: 0.0 });
    }
    if !max.is_finite() {
        return Err(Error::Invariant("non-finite log-likelihood ratio in Renyi estimate".into()));
    }
    let n = n_samples as f64;
    let w: Vec<f64> = t.iter().map(|&v| (v - max).exp()).collect();
    let mean = w.iter().sum::<f64>() / n;
    let var = if n_samples > 1 {
        w.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let log_mean = mean.ln() + max;
    Ok(McEstimate {
        estimate: log_mean / (alpha - 1.0),
        std_error: (var / n).sqrt() / mean / (1.0 - alpha),
    })
}

/// Closed-form `D_alpha(N(p) || N(q))` for `alpha` in (0, 1).
pub fn renyi_gaussian(p: &GaussianParams, q: &GaussianParams, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("Renyi order must lie in (0, 1), got {alpha}")));
    }
    let mixed = alpha * q.variance + (1.0 - alpha) * p.variance;
    let d = p.mean - q.mean;
    Ok(alpha * d * d / (2.0 * mixed)
        + (mixed / (p.variance.powf(1.0 - alpha) * q.variance.powf(alpha))).ln()
            / (2.0 * (alpha - 1.0)))
}
