//! Pointwise generalized Hermitian eigenproblems `X v = λ ω v`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use super::field::{HermitianField, PotentialField};
use super::grid::TorusGrid;
use crate::error::{Error, Result};
use crate::phase::{self, Spectrum};

/// Eigenvalues (descending) and `ω`-orthonormal eigenvectors at one point.
#[derive(Debug, Clone)]
pub struct PointEigen {
    pub values: Vec<f64>,
    /// Column `k` pairs with `values[k]`; `v_k* ω v_k = 1`.
    pub vectors: DMatrix<Complex64>,
}

/// Cholesky factor of a Hermitian matrix, rejecting anything that is not
/// positive definite (complex square roots of non-positive pivots included).
pub(crate) fn positive_cholesky(m: &DMatrix<Complex64>) -> Option<DMatrix<Complex64>> {
    let l = m.clone().cholesky()?.l();
    let ok = (0..m.nrows()).all(|i| {
        let d = l[(i, i)];
        d.re.is_finite() && d.re > 0.0 && d.im.abs() <= 1e-14 * d.re
    });
    ok.then_some(l)
}

/// Relative eigen-decomposition at one point via `ω = LL*` and the
/// Hermitian eigenproblem of `L⁻¹ X L⁻*`.
pub fn point_eigen(x: &DMatrix<Complex64>, omega: &DMatrix<Complex64>) -> Option<PointEigen> {
    let n = x.nrows();
    let l_inv = positive_cholesky(omega)?.try_inverse()?;
    let mut y = &l_inv * x * l_inv.adjoint();
    // Remove round-off asymmetry before the Hermitian solver.
    y = (&y + y.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(y);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let back = l_inv.adjoint() * &eig.eigenvectors;
    let vectors = DMatrix::from_fn(n, n, |i, k| back[(i, order[k])]);
    Some(PointEigen { values, vectors })
}

/// Eigenvalues only, descending.
pub fn point_eigenvalues(x: &DMatrix<Complex64>, omega: &DMatrix<Complex64>) -> Option<Vec<f64>> {
    let l_inv = positive_cholesky(omega)?.try_inverse()?;
    let y = &l_inv * x * l_inv.adjoint();
    let y = (&y + y.adjoint()) * Complex64::new(0.5, 0.0);
    let mut v: Vec<f64> = y.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    Some(v)
}

/// Relative spectra on the whole grid, stored flat (`n` values per point).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumField {
    grid: TorusGrid,
    n: usize,
    values: Vec<f64>,
}

impl SpectrumField {
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn at(&self, p: usize) -> &[f64] {
        &self.values[p * self.n..(p + 1) * self.n]
    }

    pub fn spectrum(&self, p: usize) -> Spectrum {
        Spectrum::from_slice(self.at(p)).expect("relative eigenvalues are finite")
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Field of the k-th largest eigenvalue.
    pub fn component(&self, k: usize) -> PotentialField {
        let v = (0..self.len()).map(|p| self.at(p)[k]).collect();
        PotentialField::new(self.grid.clone(), v).expect("finite eigenvalues")
    }
}

pub(crate) fn check_metric(omega: &HermitianField) -> Result<()> {
    for p in 0..omega.grid().len() {
        if positive_cholesky(&omega.at(p)).is_none() {
            return Err(Error::NonPositiveMetric { point: p });
        }
    }
    Ok(())
}

/// Per-point eigenvalues of the pencil `(X, ω)`, sorted descending.
pub fn relative_spectrum(x: &HermitianField, omega: &HermitianField) -> Result<SpectrumField> {
    x.grid().ensure_same(omega.grid())?;
    let n = x.dim();
    let per_point: Vec<Option<Vec<f64>>> = (0..x.grid().len())
        .into_par_iter()
        .map(|p| point_eigenvalues(&x.at(p), &omega.at(p)))
        .collect();
    let mut values = Vec::with_capacity(n * per_point.len());
    for (p, v) in per_point.into_iter().enumerate() {
        let v = v.ok_or(Error::NonPositiveMetric { point: p })?;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite eigenvalue at point {p}")));
        }
        values.extend(v);
    }
    Ok(SpectrumField {
        grid: x.grid().clone(),
        n,
        values,
    })
}

/// Pointwise `(Re, Im)` of `(X + √−1ω)ⁿ / ωⁿ`, i.e. of `Π(λᵢ + i)`.
pub fn mixed_re_im(x: &HermitianField, omega: &HermitianField) -> Result<(PotentialField, PotentialField)> {
    let spec = relative_spectrum(x, omega)?;
    let mut re = Vec::with_capacity(spec.len());
    let mut im = Vec::with_capacity(spec.len());
    for p in 0..spec.len() {
        let (r, i) = phase::sigma_product(&spec.spectrum(p))?;
        re.push(r);
        im.push(i);
    }
    Ok((
        PotentialField::new(x.grid().clone(), re)?,
        PotentialField::new(x.grid().clone(), im)?,
    ))
}
