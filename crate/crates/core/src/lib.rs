//! Multivariate mean equicontinuity for topological dynamical systems.
//!
//! The crate provides concrete systems ([`systems`]), exact multidistances and
//! a Besicovitch m-distance estimator ([`multidist`]), the factor map onto the
//! odometer for constant-length substitutions ([`mef`]), empirical classifiers
//! ([`classify`]) and a batch experiment runner ([`harness`]).

pub mod classify;
pub mod error;
pub mod harness;
pub mod mef;
pub mod multidist;
pub mod rng;
pub mod systems;

pub use error::{Error, Result};
