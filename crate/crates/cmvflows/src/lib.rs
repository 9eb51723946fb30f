//! Periodic Ablowitz–Ladik dynamics realized as isospectral flows on Floquet
//! CMV matrices.

pub mod cmv;
pub mod conserved;
pub mod curve;
pub mod error;
pub mod flows;
pub mod json;
pub mod laurent;
pub mod linalg;
pub mod poisson;
pub mod rng;
pub mod scalar;
pub mod suite;

pub use error::{Error, Result};
