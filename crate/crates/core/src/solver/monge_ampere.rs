//! `(χ̃ + tω + √−1∂∂̄u)ⁿ = e^{βu} ωⁿ`, solved in the form
//! `Σ ln λₖ − βu = 0` with positivity kept by the line search.

use super::engine::{Engine, PointLaw, PointValue};
use super::SolveConfig;
use crate::error::{Error, Result};
use crate::torus::{relative_spectrum, HermitianField, PotentialField};

struct ExpMaLaw {
    beta: f64,
}

impl PointLaw for ExpMaLaw {
    fn eval(&self, _point: usize, lambda: &[f64], u: f64) -> Option<PointValue> {
        let lmin = lambda[lambda.len() - 1];
        if !(lmin > 0.0) {
            return Some(PointValue {
                residual: f64::NAN,
                scale: 1.0,
                gradient: vec![0.0; lambda.len()],
                margin: lmin,
            });
        }
        let log_det: f64 = lambda.iter().map(|l| l.ln()).sum();
        Some(PointValue {
            residual: log_det - self.beta * u,
            scale: 1.0,
            gradient: lambda.iter().map(|l| 1.0 / l).collect(),
            margin: lmin,
        })
    }

    fn zeroth_order(&self) -> f64 {
        -self.beta
    }

    fn mean_free(&self) -> bool {
        false
    }

    fn safety(&self) -> f64 {
        f64::MIN_POSITIVE
    }

    fn exit_error(&self, point: usize, margin: f64) -> Error {
        Error::PositivityExit {
            point,
            min_eigenvalue: margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaSolution {
    pub u: PotentialField,
    pub iterations: usize,
    pub residual_sup: f64,
}

/// Solves the exponential Monge–Ampère equation for `u_β`. The start `u0`
/// defaults to zero; the solution is not normalized.
pub fn solve_ma_exponential(
    chi_tilde: &HermitianField,
    omega: &HermitianField,
    t: f64,
    beta: f64,
    config: &SolveConfig,
    u0: Option<&PotentialField>,
) -> Result<MaSolution> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
    }
    let base = chi_tilde.add_scaled(omega, t)?;
    let spec = relative_spectrum(&base, omega)?;
    for p in 0..spec.len() {
        let lmin = spec.at(p)[spec.dim() - 1];
        if !(lmin > 0.0) {
            return Err(Error::PositivityExit {
                point: p,
                min_eigenvalue: lmin,
            });
        }
    }
    let grid = base.grid().clone();
    let zero = PotentialField::zeros(&grid);
    let u0 = u0.unwrap_or(&zero);
    u0.grid().ensure_same(&grid)?;
    let law = ExpMaLaw { beta };
    let engine = Engine::new(&law, &base, omega, config);
    let out = engine.solve(u0.values())?;
    Ok(MaSolution {
        u: PotentialField::new(grid, out.u)?,
        iterations: out.iterations,
        residual_sup: out.residual_sup,
    })
}
