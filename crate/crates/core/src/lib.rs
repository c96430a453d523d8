//! Rate-distortion quantities for vector Gaussian sources under individual
//! (per-component) mean-squared-error constraints.
//!
//! - [`covariance`]: symmetric matrices, the two-type-correlation (2TC)
//!   family, constraint vectors and source normalization.
//! - [`sdc`]: the semidefinite condition `K ⪰ diag(e)`.
//! - [`rdf`]: Hadamard lower rate, closed forms and the Max-Det solver.
//! - [`region`]: maximum peripheral and central correlations keeping the SDC.
//! - [`probability`]: SDC probability under uniform constraints, and a
//!   sampled backward test channel.

pub mod covariance;
mod error;
pub mod probability;
pub mod rdf;
pub mod region;
pub mod sdc;

pub use covariance::{DistortionConstraints, SymmetricMatrix, TwoTypeCorrelation};
pub use error::{Error, Result};
