//! Numerical laboratory for the deformed Hermitian–Yang–Mills equation on
//! flat tori: pointwise phase algebra, spectral fields, cone-preserving
//! Newton solvers and the estimate audits built on them.

pub mod error;
pub mod lab;
pub mod numeric;
pub mod phase;
pub mod solver;
pub mod suites;
pub mod torus;

pub use error::{Error, Result};
pub use phase::{PhaseWindow, Spectrum};
pub use solver::{PathState, SolveConfig};
pub use torus::{Backgrounds, HermitianField, PotentialField, ScalarField, TorusGrid};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
