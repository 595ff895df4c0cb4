//! Full semiparametric likelihood inference for a response that is missing not
//! at random.
//!
//! The propensity pr(D = 0 | x, y) is logistic in (x_p, y), the outcome
//! density f(y | x, ξ) is parametric, and the covariate distribution is left
//! unspecified. The missing and observed covariate distributions are then linked
//! by a density ratio model and profiled out with empirical likelihood.

pub mod basis;
pub mod config;
pub mod data;
pub mod error;
pub mod estimation;
pub mod identifiability;
pub mod inference;
pub mod likelihood;
pub mod model;
pub mod optimize;
pub mod par;
pub mod quadrature;
pub mod rng;
pub mod simulation;

pub use basis::{Basis, Term};
pub use data::Dataset;
pub use error::{Error, Result};
pub use estimation::{fit_mle, FitOptions, FitResult};
pub use identifiability::{check_model, IdentStatus, Verdict};
pub use likelihood::{ell1, ell2, solve_lambda, ElState, ProfileLikelihood};
pub use model::{MeanLink, ModelSpec, NormalBasis, OutcomeModel, Theta};
pub use par::Execution;
