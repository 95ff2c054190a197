//! Positive solutions of indefinite Minkowski-curvature boundary value
//! problems by shooting, continuation and numeric certificates.

pub mod bvp;
pub mod certificates;
pub mod cli;
pub mod config;
pub mod continuation;
pub mod error;
pub mod figures;
pub mod nonlinearity;
pub mod phase_flow;
pub mod quad;
pub mod roots;
pub mod weight;

pub use error::{Error, Result};
pub use nonlinearity::{Nonlinearity, NonlinearityKind};
pub use weight::WeightFunction;
