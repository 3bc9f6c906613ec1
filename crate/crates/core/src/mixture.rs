//! Finite mixture parameterization, densities, log-likelihood and sampling.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::divergence::{DirichletParams, GaussianParams};
use crate::error::{Error, Result};
use crate::rng::{seeded, SeededRng};

const SIMPLEX_TOL: f64 = 1e-12;

/// Which distribution each mixture component belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComponentFamily {
    /// Categorical outcomes `1..=categories`.
    Multinomial { categories: usize },
    /// Gaussian with a fixed, shared variance; only the mean is a parameter.
    GaussianKnownVar { component_variance: f64 },
    /// Gaussian with mean and variance both unknown.
    GaussianUnknownVar,
}

impl ComponentFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ComponentFamily::Multinomial { categories } if categories < 2 => Err(Error::Config(format!(
                "multinomial family needs at least 2 categories, got {categories}"
            ))),
            ComponentFamily::GaussianKnownVar { component_variance }
                if !(component_variance > 0.0 && component_variance.is_finite()) =>
            {
                Err(Error::Config(format!(
                    "component variance must be > 0, got {component_variance}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn known_variance(&self) -> Option<f64> {
        match *self {
            ComponentFamily::GaussianKnownVar { component_variance } => Some(component_variance),
            _ => None,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        !matches!(self, ComponentFamily::Multinomial { .. })
    }
}

/// Parameters of a single component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentParams {
    /// Category probabilities θ_1..θ_V.
    Categorical(Vec<f64>),
    /// Mean of a known-variance Gaussian.
    Mean(f64),
    Gaussian(GaussianParams),
}

impl ComponentParams {
    /// Location used for ordering components (Gaussian mean; NaN otherwise).
    pub fn location(&self) -> f64 {
        match self {
            ComponentParams::Categorical(_) => f64::NAN,
            ComponentParams::Mean(m) => *m,
            ComponentParams::Gaussian(g) => g.mean(),
        }
    }
}

fn check_simplex(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Domain(format!("{name} must be nonnegative and finite: {v:?}")));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::Domain(format!("{name} must sum to 1, sums to {s}")));
    }
    Ok(())
}

/// Weights on the simplex plus one parameter record per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    family: ComponentFamily,
    weights: Vec<f64>,
    components: Vec<ComponentParams>,
}

impl MixtureParams {
    pub fn new(family: ComponentFamily, weights: Vec<f64>, components: Vec<ComponentParams>) -> Result<Self> {
        family.validate()?;
        if weights.is_empty() {
            return Err(Error::Shape("a mixture needs K >= 1 components".into()));
        }
        if weights.len() != components.len() {
            return Err(Error::Shape(format!(
                "{} weights but {} components",
                weights.len(),
                components.len()
            )));
        }
        check_simplex("mixture weights", &weights)?;
        for c in &components {
            match (family, c) {
                (ComponentFamily::Multinomial { categories }, ComponentParams::Categorical(theta)) => {
                    if theta.len() != categories {
                        return Err(Error::Shape(format!(
                            "categorical component has {} probabilities, family has {categories} categories",
                            theta.len()
                        )));
                    }
                    check_simplex("category probabilities", theta)?;
                }
                (ComponentFamily::GaussianKnownVar { .. }, ComponentParams::Mean(m)) => {
                    if !m.is_finite() {
                        return Err(Error::Domain(format!("component mean must be finite, got {m}")));
                    }
                }
                (ComponentFamily::GaussianUnknownVar, ComponentParams::Gaussian(_)) => {}
                _ => {
                    return Err(Error::Config(format!(
                        "component {c:?} does not belong to family {family:?}"
                    )))
                }
            }
        }
        Ok(Self { family, weights, components })
    }

    pub fn gaussian_known_variance(weights: Vec<f64>, means: Vec<f64>, variance: f64) -> Result<Self> {
        Self::new(
            ComponentFamily::GaussianKnownVar { component_variance: variance },
            weights,
            means.into_iter().map(ComponentParams::Mean).collect(),
        )
    }

    pub fn gaussian(weights: Vec<f64>, components: Vec<GaussianParams>) -> Result<Self> {
        Self::new(
            ComponentFamily::GaussianUnknownVar,
            weights,
            components.into_iter().map(ComponentParams::Gaussian).collect(),
        )
    }

    pub fn multinomial(weights: Vec<f64>, thetas: Vec<Vec<f64>>) -> Result<Self> {
        let categories = thetas.first().map_or(0, Vec::len);
        Self::new(
            ComponentFamily::Multinomial { categories },
            weights,
            thetas.into_iter().map(ComponentParams::Categorical).collect(),
        )
    }

    pub fn family(&self) -> ComponentFamily {
        self.family
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[ComponentParams] {
        &self.components
    }

    /// Same mixture with components reordered by `order[new] = old`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.k() {
            return Err(Error::Shape("permutation length differs from K".into()));
        }
        Self::new(
            self.family,
            order.iter().map(|&i| self.weights[i]).collect(),
            order.iter().map(|&i| self.components[i].clone()).collect(),
        )
    }

    /// Log-density of component `j` at `x`.
    pub fn component_log_density(&self, j: usize, x: Observation) -> Result<f64> {
        match (&self.components[j], x) {
            (ComponentParams::Categorical(theta), Observation::Category(v)) => {
                if v == 0 || v > theta.len() {
                    return Err(Error::Config(format!(
                        "category {v} outside 1..={}",
                        theta.len()
                    )));
                }
                Ok(theta[v - 1].ln())
            }
            (ComponentParams::Mean(m), Observation::Real(x)) => {
                let v = self.family.known_variance().expect("validated family");
                let d = x - m;
                Ok(-0.5 * (2.0 * std::f64::consts::PI * v).ln() - d * d / (2.0 * v))
            }
            (ComponentParams::Gaussian(g), Observation::Real(x)) => Ok(g.log_density(x)),
            _ => Err(Error::Config(format!(
                "observation {x:?} is incompatible with family {:?}",
                self.family
            ))),
        }
    }

    /// Draw one observation.
    pub fn sample_observation<R: Rng + ?Sized>(&self, rng: &mut R) -> Observation {
        let j = if self.k() == 1 {
            0
        } else {
            WeightedIndex::new(&self.weights).expect("validated weights").sample(rng)
        };
        sample_component(&self.components[j], self.family, rng)
    }
}

fn sample_component<R: Rng + ?Sized>(c: &ComponentParams, family: ComponentFamily, rng: &mut R) -> Observation {
    match c {
        ComponentParams::Categorical(theta) => {
            let v = WeightedIndex::new(theta).expect("validated probabilities").sample(rng);
            Observation::Category(v + 1)
        }
        ComponentParams::Mean(m) => {
            let sd = family.known_variance().expect("validated family").sqrt();
            let z: f64 = StandardNormal.sample(rng);
            Observation::Real(m + sd * z)
        }
        ComponentParams::Gaussian(g) => {
            let z: f64 = StandardNormal.sample(rng);
            Observation::Real(g.mean() + g.variance().sqrt() * z)
        }
    }
}

/// A single observation. Categories are 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observation {
    Category(usize),
    Real(f64),
}

/// Observation type carried by a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataKind {
    Categorical { categories: usize },
    Real,
}

/// n i.i.d. observations of a single kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Categorical { categories: usize, values: Vec<usize> },
    Real(Vec<f64>),
}

impl Dataset {
    pub fn categorical(categories: usize, values: Vec<usize>) -> Result<Self> {
        if categories < 1 {
            return Err(Error::Config("categorical data needs V >= 1".into()));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, &v)| v == 0 || v > categories) {
            return Err(Error::Domain(format!(
                "observation {i} = {v} outside 1..={categories}"
            )));
        }
        Ok(Dataset::Categorical { categories, values })
    }

    pub fn real(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Domain(format!("observation {i} = {v} is not finite")));
        }
        Ok(Dataset::Real(values))
    }

    pub fn empty(kind: DataKind) -> Self {
        match kind {
            DataKind::Categorical { categories } => Dataset::Categorical { categories, values: Vec::new() },
            DataKind::Real => Dataset::Real(Vec::new()),
        }
    }

    pub fn kind(&self) -> DataKind {
        match self {
            Dataset::Categorical { categories, .. } => DataKind::Categorical { categories: *categories },
            Dataset::Real(_) => DataKind::Real,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Dataset::Categorical { values, .. } => values.len(),
            Dataset::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> Observation {
        match self {
            Dataset::Categorical { values, .. } => Observation::Category(values[i]),
            Dataset::Real(v) => Observation::Real(v[i]),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Observation> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    /// Real observations, if this is a real dataset.
    pub fn as_real(&self) -> Option<&[f64]> {
        match self {
            Dataset::Real(v) => Some(v),
            Dataset::Categorical { .. } => None,
        }
    }

    /// Whether observations of this dataset can be scored by `family`.
    pub fn check_family(&self, family: ComponentFamily) -> Result<()> {
        match (self, family) {
            (Dataset::Categorical { categories, .. }, ComponentFamily::Multinomial { categories: v }) => {
                if *categories > v {
                    return Err(Error::Config(format!(
                        "dataset has {categories} categories but the family only {v}"
                    )));
                }
                Ok(())
            }
            (Dataset::Real(_), f) if f.is_gaussian() => Ok(()),
            _ => Err(Error::Config(format!(
                "dataset kind {:?} is incompatible with family {family:?}",
                self.kind()
            ))),
        }
    }
}

/// `log Σ_j exp(v_j)`; `-inf` when every entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || !max.is_finite() {
        return max;
    }
    max + values.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

/// `log Σ_j p_j q_{θ_j}(x)`.
pub fn log_mixture_density(params: &MixtureParams, x: Observation) -> Result<f64> {
    let terms = (0..params.k())
        .map(|j| Ok(params.weights[j].ln() + params.component_log_density(j, x)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(log_sum_exp(&terms))
}

/// ℓ_n(θ) = Σ_i log_mixture_density(θ, X_i).
pub fn log_likelihood(params: &MixtureParams, data: &Dataset) -> Result<f64> {
    data.check_family(params.family)?;
    data.iter().map(|x| log_mixture_density(params, x)).sum()
}

/// n i.i.d. draws from the mixture.
pub fn sample_mixture(params: &MixtureParams, n: usize, seed: u64) -> Dataset {
    let mut rng = seeded(seed);
    sample_mixture_with(params, n, &mut rng)
}

pub fn sample_mixture_with<R: Rng + ?Sized>(params: &MixtureParams, n: usize, rng: &mut R) -> Dataset {
    match params.family {
        ComponentFamily::Multinomial { categories } => {
            let values = (0..n)
                .map(|_| match params.sample_observation(rng) {
                    Observation::Category(v) => v,
                    Observation::Real(_) => unreachable!(),
                })
                .collect();
            Dataset::Categorical { categories, values }
        }
        _ => Dataset::Real(
            (0..n)
                .map(|_| match params.sample_observation(rng) {
                    Observation::Real(x) => x,
                    Observation::Category(_) => unreachable!(),
                })
                .collect(),
        ),
    }
}

/// One Dirichlet draw via normalized Gamma variates.
pub fn sample_simplex_dirichlet(conc: &DirichletParams, seed: u64) -> Vec<f64> {
    draw_dirichlet(conc.concentration(), &mut seeded(seed))
}

pub(crate) fn draw_dirichlet<R: Rng + ?Sized>(conc: &[f64], rng: &mut R) -> Vec<f64> {
    if conc.len() == 1 {
        return vec![1.0];
    }
    for _ in 0..64 {
        let g: Vec<f64> = conc
            .iter()
            .map(|&c| Gamma::new(c, 1.0).expect("positive concentration").sample(rng))
            .collect();
        let total: f64 = g.iter().sum();
        if total > 0.0 && total.is_finite() {
            return g.into_iter().map(|x| x / total).collect();
        }
    }
    // Every Gamma variate underflowed: the draw sits at a vertex.
    let j = rng.random_range(0..conc.len());
    let mut v = vec![0.0; conc.len()];
    v[j] = 1.0;
    v
}

pub(crate) fn draw_gaussian(g: &GaussianParams, rng: &mut SeededRng) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    g.mean() + g.variance().sqrt() * z
}
