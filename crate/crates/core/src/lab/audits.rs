//! Audits over converged path data: the uniform bound on `−φ_t + U_t`, the
//! weighted gradient inequality and the decreasing-sequence construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum_by;
use crate::solver::PathState;
use crate::torus::{volume, HermitianField, PotentialField, Spectral};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KSample {
    pub t: f64,
    /// `sup(−φ_t + U_t)`.
    pub k: f64,
    pub c_t: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinftyReport {
    pub samples: Vec<KSample>,
    pub k_max: f64,
    /// `max K − min K` over the steps with `t ≤ 10 t_min`.
    pub last_decade_variation: f64,
    /// `last_decade_variation / k_max`, or 0 when `k_max = 0`.
    pub relative_variation: f64,
}

impl LinftyReport {
    pub fn finite(&self) -> bool {
        self.samples.iter().all(|s| s.k.is_finite())
    }
}

/// `K(t) = sup(−φ_t + U_t)` along the path, one envelope per state.
pub fn linfty_audit(states: &[PathState], envelopes: &[PotentialField]) -> Result<LinftyReport> {
    if states.is_empty() {
        return Err(Error::InvalidInput("empty path".into()));
    }
    if states.len() != envelopes.len() {
        return Err(Error::InvalidInput(format!(
            "{} path states but {} envelopes",
            states.len(),
            envelopes.len()
        )));
    }
    let samples = states
        .iter()
        .zip(envelopes)
        .map(|(st, u)| {
            let k = u.zip_map(&st.phi, |u, p| u - p)?.max();
            Ok(KSample {
                t: st.t,
                k,
                c_t: st.c_t,
                margin: st.cone_margin_min,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k_max = samples.iter().map(|s| s.k).fold(f64::NEG_INFINITY, f64::max);
    let t_min = samples.iter().map(|s| s.t).fold(f64::INFINITY, f64::min);
    let decade: Vec<f64> = samples.iter().filter(|s| s.t <= 10.0 * t_min).map(|s| s.k).collect();
    let hi = decade.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = decade.iter().copied().fold(f64::INFINITY, f64::min);
    let last_decade_variation = hi - lo;
    let relative_variation = if k_max > 0.0 {
        last_decade_variation / k_max
    } else {
        0.0
    };
    Ok(LinftyReport {
        samples,
        k_max,
        last_decade_variation,
        relative_variation,
    })
}

/// Granularity of the constant `L` in [`gradient_diagnostic`].
pub const GRADIENT_L_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub sigma: f64,
    pub l: f64,
    /// `∫ |∂φ|²_ω (−φ̂ + 1)^{σ−2} ωⁿ`, `φ̂ = φ − sup φ`.
    pub lhs: f64,
    /// `n L ∫ωⁿ / (σ(1 − σ))`.
    pub rhs: f64,
}

impl GradientReport {
    pub fn pass(&self) -> bool {
        self.lhs <= self.rhs
    }
}

/// Smallest `L` on the grid `GRADIENT_L_STEP·ℕ` with
/// `n L + tr_ω √−1∂∂̄φ > 0` everywhere, and the weighted gradient integral.
pub fn gradient_diagnostic(phi: &PotentialField, sigma: f64, omega: &HermitianField) -> Result<GradientReport> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidInput(format!("sigma must lie in (0, 1), got {sigma}")));
    }
    let grid = phi.grid();
    grid.ensure_same(omega.grid())?;
    let n = grid.complex_dim();
    let spectral = Spectral::new(grid);
    let hess = spectral.complex_hessian(phi);
    let grad = spectral.complex_gradient(phi.values());
    let len = grid.len();
    let mut trace_min = f64::INFINITY;
    let mut grad_sq = vec![0.0; len];
    for p in 0..len {
        let w_inv = omega.at(p).try_inverse().ok_or(Error::NonPositiveMetric { point: p })?;
        let h = hess.at(p);
        let tr: f64 = (0..n)
            .map(|i| (0..n).map(|j| (w_inv[(i, j)] * h[(j, i)]).re).sum::<f64>())
            .sum();
        trace_min = trace_min.min(tr);
        // |∂φ|²_ω = Σ ω^{i j̄} ∂ᵢφ conj(∂ⱼφ).
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += (w_inv[(j, i)] * grad[i][p] * grad[j][p].conj()).re;
            }
        }
        grad_sq[p] = s;
    }
    let admissible = |k: u64| n as f64 * k as f64 * GRADIENT_L_STEP + trace_min > 0.0;
    let mut hi: u64 = 1;
    while !admissible(hi) {
        hi *= 2;
    }
    let mut lo: u64 = 0;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if admissible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let hi = if admissible(lo) { lo } else { hi };
    let l = hi as f64 * GRADIENT_L_STEP;
    let top = phi.max();
    let det = omega.determinant();
    let (v, d) = (phi.values(), det.values());
    let lhs =
        compensated_sum_by(len, |p| grad_sq[p] * (top - v[p] + 1.0).powf(sigma - 2.0) * d[p]) * grid.cell_volume();
    let rhs = n as f64 * l * volume(omega) / (sigma * (1.0 - sigma));
    Ok(GradientReport { sigma, l, lhs, rhs })
}

/// Granularity of the constant in [`decreasing_limit_audit`].
pub const DECREASING_C_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecreasingReport {
    /// Smallest `C` on the grid making the shifted sequence decreasing, or
    /// `None` when the path is not ordered by decreasing `t`.
    pub c: Option<f64>,
    pub budget: f64,
    pub pass: bool,
}

/// Smallest `C ∈ 0.01ℕ` with `φ_{t_{i+1}} + C/2^{i+1} ≤ φ_{t_i} + C/2^i`
/// for every consecutive pair; passes when it is within `budget`.
pub fn decreasing_limit_audit(states: &[PathState], budget: f64) -> Result<DecreasingReport> {
    if states.windows(2).any(|w| w[1].t >= w[0].t) {
        return Ok(DecreasingReport {
            c: None,
            budget,
            pass: false,
        });
    }
    let mut need: f64 = 0.0;
    for (i, w) in states.windows(2).enumerate() {
        let rise = w[1].phi.zip_map(&w[0].phi, |a, b| a - b)?.max();
        need = need.max(2f64.powi(i as i32 + 1) * rise);
    }
    let mut steps = (need / DECREASING_C_STEP - 1e-9).ceil().max(0.0);
    // Re-check after the rounding slack above.
    while steps * DECREASING_C_STEP < need {
        steps += 1.0;
    }
    let c = steps * DECREASING_C_STEP;
    Ok(DecreasingReport {
        c: Some(c),
        budget,
        pass: c <= budget,
    })
}
