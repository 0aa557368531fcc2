//! Discrete flat Kähler tori: grids, fields, spectral Hessians, relative
//! spectra, quadrature and cohomological constants.

mod eigen;
mod field;
mod grid;
pub mod io;
mod recipe;
mod spectral;

pub use eigen::{mixed_re_im, point_eigen, point_eigenvalues, relative_spectrum, PointEigen, SpectrumField};
pub use field::{HermitianField, PotentialField, ScalarField, HERMITIAN_TOLERANCE};
pub use grid::{TorusGrid, DEFAULT_POINT_BUDGET};
pub use recipe::{ConstantMatrix, FieldRecipe, FourierMode, ScalarRecipe};
pub use spectral::{complex_hessian, pair_index, Spectral};

pub(crate) use eigen::check_metric;

use crate::error::{Error, Result};
use crate::numeric::compensated_sum_by;
use crate::phase::cot;

/// Lebesgue integral: compensated grid sum times the cell volume.
pub fn integrate(s: &ScalarField) -> f64 {
    let v = s.values();
    compensated_sum_by(v.len(), |i| v[i]) * s.grid().cell_volume()
}

/// `∫ s ωⁿ`, with `ωⁿ` represented by the density `det ω` against Lebesgue
/// measure.
pub fn integrate_against(s: &ScalarField, omega: &HermitianField) -> Result<f64> {
    s.grid().ensure_same(omega.grid())?;
    let det = omega.determinant();
    let (a, b) = (s.values(), det.values());
    Ok(compensated_sum_by(a.len(), |i| a[i] * b[i]) * s.grid().cell_volume())
}

/// `∫ ωⁿ` in the same normalization as [`integrate_against`].
pub fn volume(omega: &HermitianField) -> f64 {
    integrate(&omega.determinant())
}

/// Average of `s` with respect to `ωⁿ`.
pub fn mean_against(s: &ScalarField, omega: &HermitianField) -> Result<f64> {
    Ok(integrate_against(s, omega)? / volume(omega))
}

/// Relative tolerance for `∫ f ωⁿ = ∫ ωⁿ`.
pub const DENSITY_NORMALIZATION_TOL: f64 = 1e-10;

/// Checks `∫ f ωⁿ = ∫ ωⁿ` to relative [`DENSITY_NORMALIZATION_TOL`].
pub fn check_density(f: &ScalarField, omega: &HermitianField) -> Result<()> {
    let vol = volume(omega);
    let defect = (integrate_against(f, omega)? - vol).abs() / vol;
    if defect > DENSITY_NORMALIZATION_TOL {
        return Err(Error::Normalization { defect });
    }
    Ok(())
}

/// Rescales `f` so that `∫ f ωⁿ = ∫ ωⁿ`.
pub fn normalize_density(f: &ScalarField, omega: &HermitianField) -> Result<ScalarField> {
    let m = mean_against(f, omega)?;
    if !(m > 0.0) {
        return Err(Error::Normalization { defect: f64::INFINITY });
    }
    Ok(f.map(|v| v / m))
}

/// The reference metric and the two background forms.
#[derive(Debug, Clone, PartialEq)]
pub struct Backgrounds {
    pub omega: HermitianField,
    pub chi: HermitianField,
    pub chi_tilde: HermitianField,
}

impl Backgrounds {
    pub fn new(omega: HermitianField, chi: HermitianField, chi_tilde: HermitianField) -> Result<Self> {
        omega.grid().ensure_same(chi.grid())?;
        omega.grid().ensure_same(chi_tilde.grid())?;
        check_metric(&omega)?;
        Ok(Self { omega, chi, chi_tilde })
    }

    /// Flat `ω = I` with constant multiples of it for `χ` and `χ̃`.
    pub fn scaled_identities(grid: &TorusGrid, chi: f64, chi_tilde: f64) -> Self {
        Self {
            omega: HermitianField::scaled_identity(grid, 1.0),
            chi: HermitianField::scaled_identity(grid, chi),
            chi_tilde: HermitianField::scaled_identity(grid, chi_tilde),
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.omega.grid()
    }

    /// `χ + χ̃ + tω`.
    pub fn path_form(&self, t: f64) -> HermitianField {
        HermitianField::combine(&[(1.0, &self.chi), (1.0, &self.chi_tilde), (t, &self.omega)])
            .expect("backgrounds share a grid")
    }

    /// `χ̃ + tω`.
    pub fn envelope_form(&self, t: f64) -> HermitianField {
        HermitianField::combine(&[(1.0, &self.chi_tilde), (t, &self.omega)]).expect("backgrounds share a grid")
    }
}

/// `(1/∫ωⁿ) ∫ (Re − cot θ₀ Im)(X + √−1ω)ⁿ` for a form `X`, i.e. the
/// constant `c` balancing `Re = cot θ₀ Im + c ωⁿ` in cohomology.
pub fn balance_constant(x: &HermitianField, omega: &HermitianField, theta0: f64) -> Result<f64> {
    let (re, im) = mixed_re_im(x, omega)?;
    let c = cot(theta0);
    let g = re.zip_map(&im, |r, i| r - c * i)?;
    mean_against(&g, omega)
}

/// Normalization constant `c_t` of the approximation equation, evaluated at
/// `φ = 0`. Requires `∫ f ωⁿ = ∫ ωⁿ`.
pub fn cohomological_ct(
    chi: &HermitianField,
    chi_tilde: &HermitianField,
    omega: &HermitianField,
    t: f64,
    theta0: f64,
    f: &ScalarField,
) -> Result<f64> {
    f.grid().ensure_same(omega.grid())?;
    check_density(f, omega)?;
    let x = HermitianField::combine(&[(1.0, chi), (1.0, chi_tilde), (t, omega)])?;
    balance_constant(&x, omega, theta0)
}

/// `V_t = ∫ (χ̃ + tω)ⁿ`, via the product of relative eigenvalues.
pub fn volume_vt(chi_tilde: &HermitianField, omega: &HermitianField, t: f64) -> Result<f64> {
    let x = chi_tilde.add_scaled(omega, t)?;
    let spec = relative_spectrum(&x, omega)?;
    let prod: Vec<f64> = (0..spec.len()).map(|p| spec.at(p).iter().product()).collect();
    integrate_against(&ScalarField::new(omega.grid().clone(), prod)?, omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    #[test]
    fn integrate_examples() {
        let g = TorusGrid::reduced(1, &[0, 1], 8).unwrap();
        assert!((integrate(&ScalarField::constant(&g, 1.0)) - TAU * TAU).abs() < 1e-12);
        let c = ScalarField::from_fn(&g, |x| x[0].cos()).unwrap();
        assert!(integrate(&c).abs() < 1e-13);
        let g = TorusGrid::reduced(2, &[0], 8).unwrap();
        let c2 = ScalarField::from_fn(&g, |x| x[0].cos().powi(2)).unwrap();
        assert!((integrate(&c2) - 0.5 * g.total_volume()).abs() < 1e-10 * g.total_volume());
    }

    #[test]
    fn ct_examples() {
        let g = TorusGrid::point(3).unwrap();
        let b = Backgrounds::scaled_identities(&g, 1.0, 1.0);
        let f = ScalarField::constant(&g, 1.0);
        let ct = cohomological_ct(&b.chi, &b.chi_tilde, &b.omega, 0.5, FRAC_PI_2, &f).unwrap();
        assert!((ct - 8.125).abs() < 1e-12);
        let ct = cohomological_ct(&b.chi, &b.chi_tilde, &b.omega, 0.5, 0.75 * PI, &f).unwrap();
        assert!((ct - 25.875).abs() < 1e-12);
    }

    #[test]
    fn ct_is_insensitive_to_exact_terms() {
        let g = TorusGrid::reduced(3, &[0], 8).unwrap();
        let b = Backgrounds::scaled_identities(&g, 1.0, 1.0);
        let f = ScalarField::constant(&g, 1.0);
        let base = cohomological_ct(&b.chi, &b.chi_tilde, &b.omega, 0.5, FRAC_PI_2, &f).unwrap();
        let rho = ScalarField::from_fn(&g, |x| 0.05 * x[0].cos()).unwrap();
        let shifted = b.chi_tilde.add(&complex_hessian(&rho)).unwrap();
        let ct = cohomological_ct(&b.chi, &shifted, &b.omega, 0.5, FRAC_PI_2, &f).unwrap();
        assert!((ct - base).abs() <= 1e-12);
    }

    #[test]
    fn density_must_be_normalized() {
        let g = TorusGrid::point(2).unwrap();
        let b = Backgrounds::scaled_identities(&g, 1.0, 1.0);
        let f = ScalarField::constant(&g, 2.0);
        assert!(matches!(
            cohomological_ct(&b.chi, &b.chi_tilde, &b.omega, 0.5, 1.0, &f),
            Err(Error::Normalization { .. })
        ));
        let f = normalize_density(&f, &b.omega).unwrap();
        check_density(&f, &b.omega).unwrap();
    }

    #[test]
    fn volume_examples() {
        let g = TorusGrid::point(3).unwrap();
        let w = HermitianField::scaled_identity(&g, 1.0);
        let vol = volume(&w);
        assert!((volume_vt(&w, &w, 1.0).unwrap() - 8.0 * vol).abs() < 1e-10 * vol);
        let zero = HermitianField::zeros(&g);
        assert!((volume_vt(&zero, &w, 1.0).unwrap() - vol).abs() < 1e-12 * vol);
        let d = HermitianField::diagonal(&g, &[1.0, 0.0, 0.0]).unwrap();
        let v = volume_vt(&d, &w, 0.25).unwrap();
        assert!((v - 1.25 * 0.25 * 0.25 * vol).abs() < 1e-12 * vol);
    }
}
