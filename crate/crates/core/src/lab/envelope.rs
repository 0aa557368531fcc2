//! Finite-β estimates of the envelope `U_t` through the exponential
//! Monge–Ampère family `(χ̃ + tω + √−1∂∂̄u)ⁿ = e^{βu} ωⁿ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{solve_ma_exponential, SolveConfig};
use crate::torus::{HermitianField, PotentialField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRun {
    pub t: f64,
    pub betas: Vec<f64>,
    pub u_betas: Vec<PotentialField>,
    /// `‖u_{β_{k+1}} − u_{β_k}‖_sup` for consecutive entries of `betas`.
    pub cauchy_norms: Vec<f64>,
    pub newton_iters: Vec<usize>,
}

impl EnvelopeRun {
    /// The estimate of `U_t`: the solution at the largest β.
    pub fn estimate(&self) -> &PotentialField {
        self.u_betas.last().expect("at least one beta")
    }

    /// Whether the Cauchy norms strictly decrease along the schedule.
    pub fn cauchy_decreasing(&self) -> bool {
        self.cauchy_norms.windows(2).all(|w| w[1] < w[0])
    }
}

/// Solves along an increasing β schedule, warm-starting each solve from the
/// previous one.
pub fn envelope_estimate(
    chi_tilde: &HermitianField,
    omega: &HermitianField,
    t: f64,
    betas: &[f64],
    config: &SolveConfig,
) -> Result<EnvelopeRun> {
    if betas.is_empty() {
        return Err(Error::InvalidInput("empty beta schedule".into()));
    }
    if betas.iter().any(|b| !(b.is_finite() && *b > 0.0)) || betas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "beta schedule must be positive and increasing".into(),
        ));
    }
    let mut u_betas: Vec<PotentialField> = Vec::with_capacity(betas.len());
    let mut newton_iters = Vec::with_capacity(betas.len());
    for &beta in betas {
        let sol = solve_ma_exponential(chi_tilde, omega, t, beta, config, u_betas.last())?;
        newton_iters.push(sol.iterations);
        u_betas.push(sol.u);
    }
    let cauchy_norms = u_betas
        .windows(2)
        .map(|w| w[1].zip_map(&w[0], |a, b| a - b).map(|d| d.sup_norm()))
        .collect::<Result<Vec<_>>>()?;
    Ok(EnvelopeRun {
        t,
        betas: betas.to_vec(),
        u_betas,
        cauchy_norms,
        newton_iters,
    })
}

/// `max(U_{t₁} − U_{t₂})` over the grid; the ordering `U_{t₁} ≤ U_{t₂}`
/// expected for `t₁ < t₂` holds to tolerance `tol` iff this is `≤ tol`.
pub fn envelope_ordering_excess(lower: &PotentialField, upper: &PotentialField) -> Result<f64> {
    Ok(lower.zip_map(upper, |a, b| a - b)?.max())
}
