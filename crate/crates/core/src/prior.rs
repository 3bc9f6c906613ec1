//! Priors, mean-field variational factors, and the expectations that the
//! coordinate updates are built from.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::divergence::{
    kl_dirichlet, kl_gaussian, kl_inverse_gamma, kl_nig, DirichletParams, GaussianParams, InverseGammaParams,
    NigParams,
};
use crate::error::{Error, Result};
use crate::mixture::{draw_dirichlet, draw_gaussian, ComponentFamily, ComponentParams, MixtureParams, Observation};
use crate::rng::SeededRng;
use crate::special::digamma_unchecked;

/// Prior on a single component's parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentPrior {
    /// `D_V(β_1..β_V)` on category probabilities.
    Dirichlet(DirichletParams),
    /// `N(m, 𝒱²)` on the mean of a known-variance Gaussian.
    GaussianMean(GaussianParams),
    /// Joint Normal-Inverse-Gamma on (mean, variance).
    Nig(NigParams),
    /// `N(m, 𝒱²) ⊗ IG(a, b)` on (mean, variance).
    FactorizedNormalIg { mean: GaussianParams, variance: InverseGammaParams },
}

impl ComponentPrior {
    /// `D_V(β, ..., β)`.
    pub fn symmetric_dirichlet(beta: f64, categories: usize) -> Result<Self> {
        Ok(ComponentPrior::Dirichlet(DirichletParams::symmetric(beta, categories)?))
    }

    /// `N(0, 𝒱²)`.
    pub fn gaussian_mean(prior_variance: f64) -> Result<Self> {
        Ok(ComponentPrior::GaussianMean(GaussianParams::new(0.0, prior_variance)?))
    }

    /// `NIG(0, 𝒱⁻², 1, γ²)`.
    pub fn nig(prior_variance: f64, gamma2: f64) -> Result<Self> {
        Ok(ComponentPrior::Nig(NigParams::new(0.0, 1.0 / prior_variance, 1.0, gamma2)?))
    }

    /// `N(0, 𝒱²) ⊗ IG(1, γ²)`.
    pub fn factorized(prior_variance: f64, gamma2: f64) -> Result<Self> {
        Ok(ComponentPrior::FactorizedNormalIg {
            mean: GaussianParams::new(0.0, prior_variance)?,
            variance: InverseGammaParams::new(1.0, gamma2)?,
        })
    }

    fn check_family(&self, family: ComponentFamily) -> Result<()> {
        let ok = match (self, family) {
            (ComponentPrior::Dirichlet(d), ComponentFamily::Multinomial { categories }) => d.dim() == categories,
            (ComponentPrior::GaussianMean(_), ComponentFamily::GaussianKnownVar { .. }) => true,
            (ComponentPrior::Nig(_), ComponentFamily::GaussianUnknownVar) => true,
            (ComponentPrior::FactorizedNormalIg { .. }, ComponentFamily::GaussianUnknownVar) => true,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("prior {self:?} does not fit family {family:?}")))
        }
    }

    /// The variational factor equal to this prior.
    pub fn as_factor(&self) -> ComponentFactor {
        match self {
            ComponentPrior::Dirichlet(d) => ComponentFactor::Dirichlet(d.clone()),
            ComponentPrior::GaussianMean(g) => ComponentFactor::Gaussian(*g),
            ComponentPrior::Nig(n) => ComponentFactor::Nig(*n),
            ComponentPrior::FactorizedNormalIg { mean, variance } => {
                ComponentFactor::NormalIg { mean: *mean, variance: *variance }
            }
        }
    }
}

/// Dirichlet weight prior plus one prior per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub weight_prior: DirichletParams,
    pub component_priors: Vec<ComponentPrior>,
}

impl PriorSpec {
    pub fn new(weight_prior: DirichletParams, component_priors: Vec<ComponentPrior>) -> Result<Self> {
        if weight_prior.dim() != component_priors.len() {
            return Err(Error::Shape(format!(
                "weight prior has dimension {} but {} component priors were given",
                weight_prior.dim(),
                component_priors.len()
            )));
        }
        Ok(Self { weight_prior, component_priors })
    }

    /// `D_K(a, ..., a)` on the weights and the same prior on every component.
    pub fn symmetric(weight_concentration: f64, component: ComponentPrior, k: usize) -> Result<Self> {
        Self::new(DirichletParams::symmetric(weight_concentration, k)?, vec![component; k])
    }

    pub fn k(&self) -> usize {
        self.component_priors.len()
    }

    pub fn validate(&self, family: ComponentFamily) -> Result<()> {
        family.validate()?;
        if self.weight_prior.dim() != self.component_priors.len() {
            return Err(Error::Shape("weight prior and component priors disagree on K".into()));
        }
        self.component_priors.iter().try_for_each(|p| p.check_family(family))
    }

    /// True when some weight concentration lies outside `[2/K, 1]`, the range
    /// for which the Dirichlet prior-mass guarantee holds. Never set for K = 1.
    pub fn weight_prior_warning(&self) -> bool {
        let k = self.k();
        k >= 2
            && self
                .weight_prior
                .concentration()
                .iter()
                .any(|&a| a < 2.0 / k as f64 || a > 1.0)
    }

    /// Reorder components: `order[new] = old`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let c = self.weight_prior.concentration();
        Self::new(
            DirichletParams::new(order.iter().map(|&i| c[i]).collect())?,
            order.iter().map(|&i| self.component_priors[i].clone()).collect(),
        )
    }
}

/// Variational factor for one component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentFactor {
    /// `D_V(γ_1j..γ_Vj)`.
    Dirichlet(DirichletParams),
    /// `N(n_j, s_j²)` on the mean.
    Gaussian(GaussianParams),
    Nig(NigParams),
    /// `N(m, s²) ⊗ IG(a, b)`.
    NormalIg { mean: GaussianParams, variance: InverseGammaParams },
}

impl ComponentFactor {
    /// Posterior-mean point estimate of the component parameters.
    pub fn point_estimate(&self) -> ComponentParams {
        match self {
            ComponentFactor::Dirichlet(d) => ComponentParams::Categorical(d.mean()),
            ComponentFactor::Gaussian(g) => ComponentParams::Mean(g.mean()),
            ComponentFactor::Nig(n) => ComponentParams::Gaussian(
                GaussianParams::floored(n.location(), inverse_gamma_center(n.shape(), n.scale()))
                    .expect("finite factor"),
            ),
            ComponentFactor::NormalIg { mean, variance } => ComponentParams::Gaussian(
                GaussianParams::floored(mean.mean(), inverse_gamma_center(variance.shape(), variance.scale()))
                    .expect("finite factor"),
            ),
        }
    }

    fn sample(&self, rng: &mut SeededRng) -> ComponentParams {
        match self {
            ComponentFactor::Dirichlet(d) => ComponentParams::Categorical(draw_dirichlet(d.concentration(), rng)),
            ComponentFactor::Gaussian(g) => ComponentParams::Mean(draw_gaussian(g, rng)),
            ComponentFactor::Nig(n) => {
                let var = draw_inverse_gamma(n.shape(), n.scale(), rng);
                let mean = draw_gaussian(&GaussianParams::floored(n.location(), var / n.precision_scale()).unwrap(), rng);
                ComponentParams::Gaussian(GaussianParams::floored(mean, var).unwrap())
            }
            ComponentFactor::NormalIg { mean, variance } => {
                let var = draw_inverse_gamma(variance.shape(), variance.scale(), rng);
                ComponentParams::Gaussian(GaussianParams::floored(draw_gaussian(mean, rng), var).unwrap())
            }
        }
    }
}

/// Mean of IG(a, b) when it exists, otherwise its mode.
fn inverse_gamma_center(shape: f64, scale: f64) -> f64 {
    if shape > 1.0 {
        scale / (shape - 1.0)
    } else {
        scale / (shape + 1.0)
    }
}

fn draw_inverse_gamma(shape: f64, scale: f64, rng: &mut SeededRng) -> f64 {
    use rand_distr::{Distribution, Gamma};
    let g = Gamma::new(shape, 1.0 / scale).expect("positive parameters").sample(rng);
    1.0 / g
}

/// Mean-field state `ρ_p ⊗ ρ_1 ⊗ ... ⊗ ρ_K` plus the responsibilities ω.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalState {
    pub weight_factor: DirichletParams,
    pub component_factors: Vec<ComponentFactor>,
    /// n × K, each row on the simplex.
    pub responsibilities: Vec<Vec<f64>>,
}

impl VariationalState {
    /// Factors equal to the prior, uniform responsibilities.
    pub fn from_prior(prior: &PriorSpec, n: usize) -> Self {
        let k = prior.k();
        Self {
            weight_factor: prior.weight_prior.clone(),
            component_factors: prior.component_priors.iter().map(ComponentPrior::as_factor).collect(),
            responsibilities: vec![vec![1.0 / k as f64; k]; n],
        }
    }

    pub fn k(&self) -> usize {
        self.component_factors.len()
    }

    /// Check row-stochasticity of ω to `tol`.
    pub fn check_responsibilities(&self, tol: f64) -> Result<()> {
        for (i, row) in self.responsibilities.iter().enumerate() {
            if row.len() != self.k() {
                return Err(Error::Shape(format!("responsibility row {i} has length {}", row.len())));
            }
            let s: f64 = row.iter().sum();
            if row.iter().any(|&w| !(w >= 0.0)) || (s - 1.0).abs() > tol {
                return Err(Error::Invariant(format!("responsibility row {i} is not on the simplex: {row:?}")));
            }
        }
        Ok(())
    }

    /// Posterior-mean mixture: weights `φ/Σφ` and each factor's mean.
    pub fn point_estimate(&self, family: ComponentFamily) -> Result<MixtureParams> {
        MixtureParams::new(
            family,
            self.weight_factor.mean(),
            self.component_factors.iter().map(ComponentFactor::point_estimate).collect(),
        )
    }

    /// Draw θ ~ ρ.
    pub fn sample_params(&self, family: ComponentFamily, rng: &mut SeededRng) -> Result<MixtureParams> {
        let weights = draw_dirichlet(self.weight_factor.concentration(), rng);
        let comps = self.component_factors.iter().map(|f| f.sample(rng)).collect();
        MixtureParams::new(family, weights, comps)
    }
}

/// E_{p ~ ρ_p}[log p_j] = ψ(φ_j) − ψ(Σ φ).
pub fn expected_log_weight(weight_factor: &DirichletParams, j: usize) -> Result<f64> {
    let c = weight_factor.concentration();
    if j >= c.len() {
        return Err(Error::Shape(format!("component index {j} out of range for K = {}", c.len())));
    }
    Ok(digamma_unchecked(c[j]) - digamma_unchecked(weight_factor.total()))
}

/// Pre-computed moments of a component factor; evaluating the expected
/// log-density at many points reuses them.
#[derive(Debug, Clone)]
pub(crate) enum FactorMoments {
    Categorical { expected_log: Vec<f64> },
    KnownVar { mean: f64, spread: f64, variance: f64, log_norm: f64 },
    Nig { mean: f64, inv_precision_scale: f64, mean_precision: f64, mean_log_var: f64 },
    NormalIg { mean: f64, spread: f64, mean_precision: f64, mean_log_var: f64 },
}

impl FactorMoments {
    pub(crate) fn new(factor: &ComponentFactor, family: ComponentFamily) -> Result<Self> {
        match (factor, family) {
            (ComponentFactor::Dirichlet(d), ComponentFamily::Multinomial { categories }) if d.dim() == categories => {
                Ok(FactorMoments::Categorical { expected_log: d.expected_log() })
            }
            (ComponentFactor::Gaussian(g), ComponentFamily::GaussianKnownVar { component_variance }) => {
                Ok(FactorMoments::KnownVar {
                    mean: g.mean(),
                    spread: g.variance(),
                    variance: component_variance,
                    log_norm: -0.5 * (2.0 * PI * component_variance).ln(),
                })
            }
            (ComponentFactor::Nig(n), ComponentFamily::GaussianUnknownVar) => Ok(FactorMoments::Nig {
                mean: n.location(),
                inv_precision_scale: 1.0 / n.precision_scale(),
                mean_precision: n.mean_inverse_variance(),
                mean_log_var: n.variance_marginal().mean_log(),
            }),
            (ComponentFactor::NormalIg { mean, variance }, ComponentFamily::GaussianUnknownVar) => {
                Ok(FactorMoments::NormalIg {
                    mean: mean.mean(),
                    spread: mean.variance(),
                    mean_precision: variance.mean_inverse(),
                    mean_log_var: variance.mean_log(),
                })
            }
            _ => Err(Error::Config(format!("factor {factor:?} does not fit family {family:?}"))),
        }
    }

    pub(crate) fn expected_log_density(&self, x: Observation) -> Result<f64> {
        const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
        match (self, x) {
            (FactorMoments::Categorical { expected_log }, Observation::Category(v)) => {
                if v == 0 || v > expected_log.len() {
                    return Err(Error::Config(format!("category {v} outside 1..={}", expected_log.len())));
                }
                Ok(expected_log[v - 1])
            }
            (FactorMoments::KnownVar { mean, spread, variance, log_norm }, Observation::Real(x)) => {
                let d = mean - x;
                Ok(log_norm - (spread + d * d) / (2.0 * variance))
            }
            (FactorMoments::Nig { mean, inv_precision_scale, mean_precision, mean_log_var }, Observation::Real(x)) => {
                let d = x - mean;
                Ok(-HALF_LN_2PI - 0.5 * mean_log_var - 0.5 * (d * d * mean_precision + inv_precision_scale))
            }
            (FactorMoments::NormalIg { mean, spread, mean_precision, mean_log_var }, Observation::Real(x)) => {
                let d = x - mean;
                Ok(-HALF_LN_2PI - 0.5 * mean_log_var - 0.5 * mean_precision * (d * d + spread))
            }
            _ => Err(Error::Config(format!("observation {x:?} does not fit the component family"))),
        }
    }
}

/// `∫ log q_θ(x) ρ_j(dθ)` for one factor and one observation.
pub fn expected_log_component_density(
    factor: &ComponentFactor,
    x: Observation,
    family: ComponentFamily,
) -> Result<f64> {
    FactorMoments::new(factor, family)?.expected_log_density(x)
}

/// `KL(ρ_j || π_j)` for one component.
pub fn kl_factor_to_prior(factor: &ComponentFactor, prior: &ComponentPrior) -> Result<f64> {
    match (factor, prior) {
        (ComponentFactor::Dirichlet(f), ComponentPrior::Dirichlet(p)) => kl_dirichlet(f, p),
        (ComponentFactor::Gaussian(f), ComponentPrior::GaussianMean(p)) => Ok(kl_gaussian(f, p)),
        (ComponentFactor::Nig(f), ComponentPrior::Nig(p)) => Ok(kl_nig(f, p)),
        (
            ComponentFactor::NormalIg { mean, variance },
            ComponentPrior::FactorizedNormalIg { mean: pm, variance: pv },
        ) => Ok(kl_gaussian(mean, pm) + kl_inverse_gamma(variance, pv)),
        _ => Err(Error::Config(format!("factor {factor:?} does not match prior {prior:?}"))),
    }
}

/// `KL(ρ_p || π_p) + Σ_j KL(ρ_j || π_j)`.
pub fn kl_state_to_prior(state: &VariationalState, prior: &PriorSpec) -> Result<f64> {
    if state.k() != prior.k() {
        return Err(Error::Shape(format!("state has K = {} but prior K = {}", state.k(), prior.k())));
    }
    let mut kl = kl_dirichlet(&state.weight_factor, &prior.weight_prior)?;
    for (f, p) in state.component_factors.iter().zip(&prior.component_priors) {
        kl += kl_factor_to_prior(f, p)?;
    }
    Ok(kl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use fracvb_oracle::MeanAcc;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;
    const UNIT: ComponentFamily = ComponentFamily::GaussianKnownVar { component_variance: 1.0 };

    #[test]
    fn expected_log_weight_examples() {
        let phi = DirichletParams::new(vec![1.0, 1.0]).unwrap();
        assert!((expected_log_weight(&phi, 0).unwrap() + 1.0).abs() < 1e-14);
        let sym = DirichletParams::symmetric(2.5, 4).unwrap();
        let v0 = expected_log_weight(&sym, 0).unwrap();
        for j in 1..4 {
            assert_eq!(expected_log_weight(&sym, j).unwrap(), v0);
        }
        let one = DirichletParams::new(vec![3.7]).unwrap();
        assert_eq!(expected_log_weight(&one, 0).unwrap(), 0.0);
        assert!(matches!(expected_log_weight(&one, 1), Err(Error::Shape(_))));
    }

    #[test]
    fn gaussian_point_mass_factor() {
        let f = ComponentFactor::Gaussian(GaussianParams::floored(1.3, 0.0).unwrap());
        let v = expected_log_component_density(&f, Observation::Real(1.3), UNIT).unwrap();
        assert!((v + HALF_LN_2PI).abs() < 1e-11);
    }

    #[test]
    fn symmetric_dirichlet_factor() {
        let f = ComponentFactor::Dirichlet(DirichletParams::symmetric(1.7, 4).unwrap());
        let fam = ComponentFamily::Multinomial { categories: 4 };
        let expected = digamma_unchecked(1.7) - digamma_unchecked(4.0 * 1.7);
        for v in 1..=4 {
            let e = expected_log_component_density(&f, Observation::Category(v), fam).unwrap();
            assert!((e - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_factor_matches_monte_carlo() {
        let f = ComponentFactor::Gaussian(GaussianParams::new(0.0, 1.0).unwrap());
        let v = expected_log_component_density(&f, Observation::Real(1.0), UNIT).unwrap();
        assert!((v - (-HALF_LN_2PI - 1.0)).abs() < 1e-15);
        let mut rng = seeded(1);
        let mut acc = MeanAcc::default();
        for _ in 0..200_000 {
            let mu: f64 = StandardNormal.sample(&mut rng);
            acc.push(-HALF_LN_2PI - 0.5 * (1.0 - mu) * (1.0 - mu));
        }
        assert!((acc.mean() - v).abs() < 3.0 * acc.std_error());
    }

    #[test]
    fn nig_factor_matches_monte_carlo() {
        let n = NigParams::new(0.4, 3.0, 4.0, 2.0).unwrap();
        let f = ComponentFactor::Nig(n);
        let fam = ComponentFamily::GaussianUnknownVar;
        let x = -0.7;
        let v = expected_log_component_density(&f, Observation::Real(x), fam).unwrap();
        let mut rng = seeded(2);
        let mut acc = MeanAcc::default();
        for _ in 0..200_000 {
            let ComponentParams::Gaussian(g) = f.sample(&mut rng) else { unreachable!() };
            acc.push(g.log_density(x));
        }
        assert!((acc.mean() - v).abs() < 3.0 * acc.std_error(), "{} vs {v}", acc.mean());
    }

    #[test]
    fn factor_family_mismatch() {
        let f = ComponentFactor::Gaussian(GaussianParams::new(0.0, 1.0).unwrap());
        let r = expected_log_component_density(&f, Observation::Real(0.0), ComponentFamily::GaussianUnknownVar);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    fn gauss_prior(k: usize) -> PriorSpec {
        PriorSpec::symmetric(1.0, ComponentPrior::gaussian_mean(1.0).unwrap(), k).unwrap()
    }

    #[test]
    fn kl_to_prior_examples() {
        let prior = gauss_prior(2);
        let mut state = VariationalState::from_prior(&prior, 3);
        assert_eq!(kl_state_to_prior(&state, &prior).unwrap(), 0.0);
        state.component_factors[0] = ComponentFactor::Gaussian(GaussianParams::new(1.0, 1.0).unwrap());
        assert!((kl_state_to_prior(&state, &prior).unwrap() - 0.5).abs() < 1e-15);
        state.weight_factor = DirichletParams::new(vec![2.0, 3.0]).unwrap();
        let total = kl_state_to_prior(&state, &prior).unwrap();
        let parts = kl_dirichlet(&state.weight_factor, &prior.weight_prior).unwrap()
            + kl_factor_to_prior(&state.component_factors[0], &prior.component_priors[0]).unwrap()
            + kl_factor_to_prior(&state.component_factors[1], &prior.component_priors[1]).unwrap();
        assert!((total - parts).abs() < 1e-14);
    }

    #[test]
    fn weight_prior_warning() {
        let p = |a: f64, k| PriorSpec::symmetric(a, ComponentPrior::gaussian_mean(1.0).unwrap(), k).unwrap();
        assert!(!p(1.0, 3).weight_prior_warning());
        assert!(!p(2.0 / 3.0, 3).weight_prior_warning());
        assert!(p(0.5, 3).weight_prior_warning());
        assert!(p(1.5, 3).weight_prior_warning());
        assert!(!p(5.0, 1).weight_prior_warning());
    }

    #[test]
    fn prior_family_validation() {
        let p = gauss_prior(2);
        assert!(p.validate(UNIT).is_ok());
        assert!(p.validate(ComponentFamily::GaussianUnknownVar).is_err());
        let m = PriorSpec::symmetric(1.0, ComponentPrior::symmetric_dirichlet(1.0, 3).unwrap(), 2).unwrap();
        assert!(m.validate(ComponentFamily::Multinomial { categories: 3 }).is_ok());
        assert!(m.validate(ComponentFamily::Multinomial { categories: 4 }).is_err());
    }

    #[test]
    fn state_json_field_names() {
        let state = VariationalState::from_prior(&gauss_prior(2), 1);
        let v: serde_json::Value = serde_json::to_value(&state).unwrap();
        let obj = v.as_object().unwrap();
        for key in ["weight_factor", "component_factors", "responsibilities"] {
            assert!(obj.contains_key(key), "{key}");
        }
        let back: VariationalState = serde_json::from_value(v).unwrap();
        assert_eq!(back, state);
        let bad = r#"{"weight_factor":{"concentration":[1.0,-1.0]},"component_factors":[],"responsibilities":[]}"#;
        assert!(serde_json::from_str::<VariationalState>(bad).is_err());
    }

    fn arb_factor() -> impl Strategy<Value = (f64, f64, f64)> {
        (-5.0f64..5.0, 1e-6f64..4.0, 0.1f64..4.0)
    }

    proptest! {
        #[test]
        fn expected_log_weight_is_negative_on_average(
            phi in prop::collection::vec(0.01f64..50.0, 1..6),
            raw in prop::collection::vec(0.0f64..1.0, 6),
        ) {
            let k = phi.len();
            let w: Vec<f64> = raw[..k].iter().map(|x| x + 1e-9).collect();
            let s: f64 = w.iter().sum();
            let f = DirichletParams::new(phi).unwrap();
            let v: f64 = (0..k).map(|j| w[j] / s * expected_log_weight(&f, j).unwrap()).sum();
            prop_assert!(v <= 1e-12);
        }

        #[test]
        fn jensen_for_known_variance((m, s2, v2) in arb_factor(), x in -8.0f64..8.0) {
            let fam = ComponentFamily::GaussianKnownVar { component_variance: v2 };
            let f = ComponentFactor::Gaussian(GaussianParams::new(m, s2).unwrap());
            let e = expected_log_component_density(&f, Observation::Real(x), fam).unwrap();
            let plug = GaussianParams::new(m, v2).unwrap().log_density(x);
            prop_assert!(e <= plug + 1e-12);
        }

        #[test]
        fn kl_to_prior_nonnegative(
            (m, s2, _) in arb_factor(),
            phi in prop::collection::vec(0.05f64..20.0, 2),
            a in 0.2f64..10.0,
            b in 0.2f64..10.0,
            lam in 0.1f64..10.0,
        ) {
            let prior = gauss_prior(2);
            let mut st = VariationalState::from_prior(&prior, 0);
            st.weight_factor = DirichletParams::new(phi).unwrap();
            st.component_factors[1] = ComponentFactor::Gaussian(GaussianParams::new(m, s2).unwrap());
            prop_assert!(kl_state_to_prior(&st, &prior).unwrap() >= -1e-12);

            let nprior = PriorSpec::symmetric(1.0, ComponentPrior::nig(2.0, 1.5).unwrap(), 1).unwrap();
            let mut ns = VariationalState::from_prior(&nprior, 0);
            ns.component_factors[0] = ComponentFactor::Nig(NigParams::new(m, lam, a, b).unwrap());
            prop_assert!(kl_state_to_prior(&ns, &nprior).unwrap() >= -1e-12);

            let fprior = PriorSpec::symmetric(1.0, ComponentPrior::factorized(2.0, 1.5).unwrap(), 1).unwrap();
            let mut fs = VariationalState::from_prior(&fprior, 0);
            prop_assert!(kl_state_to_prior(&fs, &fprior).unwrap().abs() <= 1e-10);
            fs.component_factors[0] = ComponentFactor::NormalIg {
                mean: GaussianParams::new(m, s2).unwrap(),
                variance: InverseGammaParams::new(a, b).unwrap(),
            };
            prop_assert!(kl_state_to_prior(&fs, &fprior).unwrap() >= -1e-12);
        }
    }
}
