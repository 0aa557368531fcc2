//! Cone-preserving Newton solvers: the approximation equation along the
//! continuity path, the exponential Monge–Ampère family and the intermediate
//! equation.

mod dhym;
mod engine;
mod intermediate;
pub mod linear;
mod monge_ampere;
mod path;

pub use dhym::{manufactured_density, newton_solve, residual_derivative, residual_field, DhymProblem, DhymSolution};
pub use engine::CLUSTER_TOL;
pub use intermediate::{find_s1, find_t1, solve_intermediate, IntermediateState, StabilityConstants};
pub use monge_ampere::{solve_ma_exponential, MaSolution};
pub use path::{continuity_path, validate_schedule, PathRun};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::PotentialField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    /// Sup-norm tolerance on the residual.
    pub residual_tol: f64,
    pub max_newton: usize,
    /// Smallest window margin allowed for an accepted iterate (radians).
    pub cone_safety: f64,
    /// Relative tolerance of the Krylov solve.
    pub linear_tol: f64,
    /// Step-length reduction factor in the line search.
    pub damping: f64,
    pub max_halvings: usize,
    pub gmres_restart: usize,
    pub gmres_max_iters: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-10,
            max_newton: 50,
            cone_safety: 1e-3,
            linear_tol: 1e-8,
            damping: 0.5,
            max_halvings: 40,
            gmres_restart: 60,
            gmres_max_iters: 600,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self, theta0: f64) -> Result<()> {
        let positive = [self.residual_tol, self.cone_safety, self.linear_tol, self.damping]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !positive || self.max_newton == 0 || self.gmres_restart == 0 || self.gmres_max_iters == 0 {
            return Err(Error::InvalidInput("solver settings must be positive".into()));
        }
        if self.damping >= 1.0 {
            return Err(Error::InvalidInput("damping factor must lie in (0, 1)".into()));
        }
        if self.cone_safety >= theta0 {
            return Err(Error::InvalidInput("cone safety must be smaller than theta0".into()));
        }
        Ok(())
    }
}

/// One converged state of the continuity path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathState {
    pub t: f64,
    /// Sup-normalized potential.
    pub phi: PotentialField,
    pub c_t: f64,
    pub cone_margin_min: f64,
    pub residual_sup: f64,
    pub newton_iters: usize,
    /// `|∫(Re − cot θ₀ Im − c_t f) ωⁿ| / ∫ ωⁿ` at the converged state.
    pub compatibility_defect: f64,
    /// Smallest `tr_ω(χ + χ̃ + tω + √−1∂∂̄φ)` over the grid.
    pub trace_min: f64,
}
