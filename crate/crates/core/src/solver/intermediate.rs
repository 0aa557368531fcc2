//! Constants `s₁`, `T₁`, `b_t` and the intermediate equation
//! `Re(χ + s₁(χ̃ + tω) + √−1∂∂̄v + √−1ω)ⁿ
//!   = cot θ₀ Im(…)ⁿ + (b_t − σ₁) ωⁿ`.

use serde::{Deserialize, Serialize};

use super::dhym::DhymProblem;
use super::SolveConfig;
use crate::error::{Error, Result};
use crate::phase::PhaseWindow;
use crate::torus::{balance_constant, Backgrounds, HermitianField, PotentialField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityConstants {
    pub sigma1: f64,
    pub s1: f64,
    pub t1: f64,
    /// `b_t` at the parameter of the last intermediate solve, if any.
    pub b_t: Option<f64>,
}

const BISECTION_STEPS: usize = 200;

fn bisect(mut lo: f64, mut hi: f64, h: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let mut h_lo = h(lo)?;
    let h_hi = h(hi)?;
    if h_lo == 0.0 {
        return Ok(lo);
    }
    if h_hi == 0.0 {
        return Ok(hi);
    }
    if h_lo.signum() == h_hi.signum() {
        return Err(Error::BracketFailure { lo, hi });
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let h_mid = h(mid)?;
        if h_mid == 0.0 {
            return Ok(mid);
        }
        if h_mid.signum() == h_lo.signum() {
            lo = mid;
            h_lo = h_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `s₁ ∈ (½, 1)` with `⟨Re − cot θ₀ Im⟩(χ + s₁χ̃) = −σ₁`.
pub fn find_s1(sigma1: f64, backgrounds: &Backgrounds, theta0: f64) -> Result<f64> {
    if !(sigma1.is_finite() && sigma1 > 0.0) {
        return Err(Error::InvalidInput("sigma1 must be positive".into()));
    }
    let h = |s: f64| -> Result<f64> {
        let x = backgrounds.chi.add_scaled(&backgrounds.chi_tilde, s)?;
        Ok(balance_constant(&x, &backgrounds.omega, theta0)? + sigma1)
    };
    bisect(0.5, 1.0, h)
}

/// `T₁ > 0` with `⟨Re − cot θ₀ Im⟩(χ + s₁χ̃ + T₁ω) = 0`.
pub fn find_t1(s1: f64, backgrounds: &Backgrounds, theta0: f64) -> Result<f64> {
    let base = backgrounds.chi.add_scaled(&backgrounds.chi_tilde, s1)?;
    let k = |t: f64| -> Result<f64> {
        balance_constant(&base.add_scaled(&backgrounds.omega, t)?, &backgrounds.omega, theta0)
    };
    let mut hi = 1.0;
    let k0 = k(0.0)?;
    if k0 >= 0.0 {
        return Err(Error::BracketFailure { lo: 0.0, hi });
    }
    let mut doublings = 0;
    while k(hi)? <= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::BracketFailure { lo: 0.0, hi });
        }
    }
    bisect(0.0, hi, k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntermediateState {
    pub t: f64,
    /// Sup-normalized solution `v_t`.
    pub v: PotentialField,
    pub b_t: f64,
    pub residual_sup: f64,
    pub iterations: usize,
    pub margin_min: f64,
}

/// Base form `χ + s₁(χ̃ + tω)`.
pub fn intermediate_base(backgrounds: &Backgrounds, s1: f64, t: f64) -> HermitianField {
    HermitianField::combine(&[
        (1.0, &backgrounds.chi),
        (s1, &backgrounds.chi_tilde),
        (s1 * t, &backgrounds.omega),
    ])
    .expect("backgrounds share a grid")
}

/// Solves the intermediate equation at `t`; `b_t` comes from the
/// cohomological balance.
pub fn solve_intermediate(
    s1: f64,
    sigma1: f64,
    t: f64,
    backgrounds: &Backgrounds,
    window: PhaseWindow,
    config: &SolveConfig,
    v0: Option<&PotentialField>,
) -> Result<IntermediateState> {
    let base = intermediate_base(backgrounds, s1, t);
    let shift = balance_constant(&base, &backgrounds.omega, window.theta0)?;
    let problem = DhymProblem::with_constant_rhs(base, backgrounds.omega.clone(), window, shift)?;
    let zero = PotentialField::zeros(backgrounds.grid());
    let sol = problem.solve(v0.unwrap_or(&zero), config)?;
    Ok(IntermediateState {
        t,
        v: sol.phi,
        b_t: shift + sigma1,
        residual_sup: sol.residual_sup,
        iterations: sol.iterations,
        margin_min: sol.margin_min,
    })
}
