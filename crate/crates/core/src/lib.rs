//! Tempered coordinate-ascent variational Bayes for finite mixtures.
//!
//! The crate covers multinomial and univariate Gaussian mixtures (known
//! variance, Normal-Inverse-Gamma, and factorized Normal ⊗ Inverse-Gamma
//! priors), penalized-ELBO selection of the number of components, closed-form
//! divergences, convergence-rate calculators, an EM baseline and a seeded
//! benchmark harness.

pub mod bench;
pub mod cavi;
pub mod divergence;
pub mod em;
pub mod error;
pub mod io;
pub mod mixture;
mod parallel;
pub mod prior;
pub mod rates;
pub mod rng;
pub mod selection;
pub mod special;

pub use error::{Error, Result};
pub use cavi::{fit, FitConfig, FitResult, Init};
pub use divergence::{DirichletParams, GaussianParams, InverseGammaParams, McEstimate, NigParams};
pub use mixture::{ComponentFamily, ComponentParams, DataKind, Dataset, MixtureParams, Observation};
pub use prior::{ComponentFactor, ComponentPrior, PriorSpec, VariationalState};
pub use selection::{select_k, ElboKind, ModelPriorWeights, SelectionResult};
