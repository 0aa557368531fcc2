//! Level sets `M_s = {−φ_t + U_t − s > 0}` and their weighted masses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum_by;
use crate::torus::{integrate_against, HermitianField, PotentialField, ScalarField};

/// Default `ε` in `g_{t,ε}`.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Default value of the positive constant `C(χ, ω, v)` in `g_{t,ε}`.
pub const DEFAULT_WEIGHT_CONSTANT: f64 = 1.0;

/// `g_{t,ε} = C + c_t (f + ε)`.
pub fn weight_density(constant: f64, c_t: f64, f: &ScalarField, epsilon: f64) -> Result<ScalarField> {
    if !(constant > 0.0 && epsilon > 0.0 && c_t >= 0.0) {
        return Err(Error::InvalidInput("weight needs C > 0, eps > 0, c_t >= 0".into()));
    }
    let g = f.map(|v| constant + c_t * (v + epsilon));
    if g.min() <= 0.0 {
        return Err(Error::InvalidInput("weight density is not positive".into()));
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelData {
    pub s: f64,
    /// `∫_{M_s} g ωⁿ`.
    pub mass: f64,
    /// `A_s = V_t⁻¹ ∫_{M_s} (−φ_t + U_t − s) g ωⁿ`.
    pub excess: f64,
}

/// Mass and excess of one level set, with exact positive parts.
pub fn level_mass(
    phi: &PotentialField,
    envelope: &PotentialField,
    g: &ScalarField,
    omega: &HermitianField,
    v_t: f64,
    s: f64,
) -> Result<LevelData> {
    let grid = phi.grid();
    grid.ensure_same(envelope.grid())?;
    grid.ensure_same(g.grid())?;
    grid.ensure_same(omega.grid())?;
    if !(v_t > 0.0) {
        return Err(Error::InvalidInput("V_t must be positive".into()));
    }
    let det = omega.determinant();
    let (p, u, w, d) = (phi.values(), envelope.values(), g.values(), det.values());
    let height = |i: usize| -p[i] + u[i] - s;
    let cell = grid.cell_volume();
    let mass = compensated_sum_by(p.len(), |i| if height(i) > 0.0 { w[i] * d[i] } else { 0.0 }) * cell;
    let excess = compensated_sum_by(p.len(), |i| height(i).max(0.0) * w[i] * d[i]) * cell / v_t;
    Ok(LevelData { s, mass, excess })
}

/// `E_t`, the excess at `s = 0`.
pub fn total_excess(
    phi: &PotentialField,
    envelope: &PotentialField,
    g: &ScalarField,
    omega: &HermitianField,
    v_t: f64,
) -> Result<f64> {
    Ok(level_mass(phi, envelope, g, omega, v_t, 0.0)?.excess)
}

/// Level data on `samples + 1` equally spaced levels from `0` to
/// `sup(−φ + U)` scaled by `overshoot` (≥ 1, so the top levels are empty).
pub fn level_profile(
    phi: &PotentialField,
    envelope: &PotentialField,
    g: &ScalarField,
    omega: &HermitianField,
    v_t: f64,
    samples: usize,
    overshoot: f64,
) -> Result<Vec<LevelData>> {
    if samples == 0 || !(overshoot >= 1.0) {
        return Err(Error::InvalidInput(
            "level profile needs samples > 0 and overshoot >= 1".into(),
        ));
    }
    let top = envelope.zip_map(phi, |u, p| u - p)?.max().max(0.0) * overshoot;
    (0..=samples)
        .map(|k| level_mass(phi, envelope, g, omega, v_t, top * k as f64 / samples as f64))
        .collect()
}

/// `∫ f lnᵖ(1 + f) ωⁿ` for `f ≥ 0`.
pub fn log_moment(f: &ScalarField, omega: &HermitianField, p: f64) -> Result<f64> {
    if f.min() < 0.0 {
        return Err(Error::InvalidInput("log moment needs f >= 0".into()));
    }
    integrate_against(&f.map(|v| v * v.ln_1p().powf(p)), omega)
}

/// `(∫ |f|^q ωⁿ)^{1/q}`.
pub fn lq_norm(f: &ScalarField, omega: &HermitianField, q: f64) -> Result<f64> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidInput(format!("L^q norm needs finite q >= 1, got {q}")));
    }
    Ok(integrate_against(&f.map(|v| v.abs().powf(q)), omega)?.powf(1.0 / q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{volume, TorusGrid};
    use std::f64::consts::PI;

    fn setup() -> (TorusGrid, HermitianField) {
        let g = TorusGrid::reduced(2, &[0], 32).unwrap();
        let w = HermitianField::scaled_identity(&g, 1.0);
        (g, w)
    }

    #[test]
    fn flat_height_has_empty_levels() {
        let (g, w) = setup();
        let z = PotentialField::zeros(&g);
        let one = ScalarField::constant(&g, 1.0);
        let d = level_mass(&z, &z, &one, &w, 1.0, 1.0).unwrap();
        assert_eq!((d.mass, d.excess), (0.0, 0.0));
    }

    #[test]
    fn cosine_height() {
        let (g, w) = setup();
        let phi = PotentialField::from_fn(&g, |x| -1.0 - x[0].cos()).unwrap();
        let z = PotentialField::zeros(&g);
        let one = ScalarField::constant(&g, 1.0);
        let vol = volume(&w);
        // {cos x₁ > 0} is half the circle; on the grid the count is off by at
        // most one cell per boundary point.
        let d = level_mass(&phi, &z, &one, &w, 2.0, 1.0).unwrap();
        assert!((d.mass - 0.5 * vol).abs() <= vol / 32.0, "{}", d.mass);
        let fine = TorusGrid::reduced(2, &[0], 1024).unwrap();
        let wf = HermitianField::scaled_identity(&fine, 1.0);
        let phif = PotentialField::from_fn(&fine, |x| -1.0 - x[0].cos()).unwrap();
        let zf = PotentialField::zeros(&fine);
        let df = level_mass(&phif, &zf, &ScalarField::constant(&fine, 1.0), &wf, 2.0, 1.0).unwrap();
        assert!((df.mass - 0.5 * vol).abs() <= vol / 1024.0);
        let d0 = level_mass(&phi, &z, &one, &w, 2.0, 0.0).unwrap();
        assert!((d0.excess - vol / 2.0).abs() < 1e-9 * vol);
        assert!((vol - (2.0 * PI).powi(4)).abs() < 1e-9 * vol);
    }

    #[test]
    fn profile_is_monotone() {
        let (g, w) = setup();
        let phi = PotentialField::from_fn(&g, |x| 0.3 * x[0].sin() - 0.1 * (2.0 * x[0]).cos()).unwrap();
        let z = PotentialField::zeros(&g);
        let f = ScalarField::from_fn(&g, |x| 1.0 + 0.5 * x[0].cos()).unwrap();
        let wt = weight_density(1.0, 2.0, &f, DEFAULT_EPSILON).unwrap();
        let prof = level_profile(&phi, &z, &wt, &w, 3.0, 50, 1.1).unwrap();
        assert!(prof
            .windows(2)
            .all(|p| p[1].mass <= p[0].mass && p[1].excess <= p[0].excess));
        assert_eq!(prof.last().unwrap().mass, 0.0);
        let e_t = total_excess(&phi, &z, &wt, &w, 3.0).unwrap();
        assert_eq!(prof[0].excess, e_t);
    }

    #[test]
    fn functionals() {
        let (g, w) = setup();
        let vol = volume(&w);
        let one = ScalarField::constant(&g, 1.0);
        assert!((log_moment(&one, &w, 2.0).unwrap() - vol * 2f64.ln().powi(2)).abs() < 1e-9);
        assert!((lq_norm(&one.map(|_| 2.0), &w, 3.0).unwrap() - 2.0 * vol.cbrt()).abs() < 1e-9);
        assert!(weight_density(1.0, 1.0, &one.map(|_| -5.0), 1e-3).is_err());
    }
}
