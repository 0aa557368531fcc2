use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::TorusGrid;
use crate::error::{Error, Result};

/// Real scalar field on a torus grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialField {
    grid: TorusGrid,
    values: Vec<f64>,
}

/// Scalar fields and potentials share one representation.
pub type ScalarField = PotentialField;

impl PotentialField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("field contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &TorusGrid, value: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f(x)` at every grid point, `x` being the real coordinates.
    pub fn from_fn(grid: &TorusGrid, f: impl Fn(&[f64]) -> f64 + Sync) -> Result<Self> {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| f(&grid.coordinates(i)))
            .collect();
        Self::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        crate::numeric::max_abs(&self.values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add_constant(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    /// Subtracts the grid maximum so that `max = 0`.
    pub fn sup_normalize(&self) -> Self {
        let m = self.max();
        self.map(|v| v - m)
    }
}

/// One `n × n` Hermitian matrix per grid point, stored column-major per point.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianField {
    grid: TorusGrid,
    n: usize,
    data: Vec<Complex64>,
}

/// Tolerance for the pointwise Hermitian symmetry check.
pub const HERMITIAN_TOLERANCE: f64 = 1e-13;

impl HermitianField {
    pub fn from_data(grid: TorusGrid, data: Vec<Complex64>) -> Result<Self> {
        let n = grid.complex_dim();
        if data.len() != grid.len() * n * n {
            return Err(Error::InvalidGrid(format!(
                "expected {} entries, got {}",
                grid.len() * n * n,
                data.len()
            )));
        }
        let f = Self { grid, n, data };
        f.check_hermitian()?;
        Ok(f)
    }

    pub(crate) fn from_data_unchecked(grid: TorusGrid, data: Vec<Complex64>) -> Self {
        let n = grid.complex_dim();
        debug_assert_eq!(data.len(), grid.len() * n * n);
        Self { grid, n, data }
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        let n = grid.complex_dim();
        Self {
            grid: grid.clone(),
            n,
            data: vec![Complex64::new(0.0, 0.0); grid.len() * n * n],
        }
    }

    /// The same matrix at every point.
    pub fn constant(grid: &TorusGrid, m: &DMatrix<Complex64>) -> Result<Self> {
        let n = grid.complex_dim();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::InvalidInput(format!("expected a {n}x{n} matrix")));
        }
        let mut data = Vec::with_capacity(grid.len() * n * n);
        for _ in 0..grid.len() {
            data.extend(m.iter().copied());
        }
        Self::from_data(grid.clone(), data)
    }

    pub fn scaled_identity(grid: &TorusGrid, a: f64) -> Self {
        let n = grid.complex_dim();
        let m = DMatrix::from_diagonal_element(n, n, Complex64::new(a, 0.0));
        Self::constant(grid, &m).expect("scaled identity is Hermitian")
    }

    pub fn diagonal(grid: &TorusGrid, entries: &[f64]) -> Result<Self> {
        let n = grid.complex_dim();
        if entries.len() != n {
            return Err(Error::InvalidInput(format!("expected {n} diagonal entries")));
        }
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(entries[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self::constant(grid, &m)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Column-major entries of the matrix at one point.
    pub fn point_slice(&self, p: usize) -> &[Complex64] {
        let nn = self.n * self.n;
        &self.data[p * nn..(p + 1) * nn]
    }

    pub fn at(&self, p: usize) -> DMatrix<Complex64> {
        DMatrix::from_column_slice(self.n, self.n, self.point_slice(p))
    }

    /// Entry `(i, j̄)` at point `p`.
    pub fn entry(&self, p: usize, i: usize, j: usize) -> Complex64 {
        self.data[p * self.n * self.n + j * self.n + i]
    }

    pub fn check_hermitian(&self) -> Result<()> {
        let n = self.n;
        for p in 0..self.grid.len() {
            let s = self.point_slice(p);
            let scale = s.iter().fold(1.0_f64, |m, z| m.max(z.norm()));
            for i in 0..n {
                for j in 0..n {
                    let d = s[j * n + i] - s[i * n + j].conj();
                    if d.norm() > HERMITIAN_TOLERANCE * scale {
                        return Err(Error::InvalidInput(format!(
                            "matrix at point {p} is not Hermitian (entry {i},{j})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// `self + a · other`.
    pub fn add_scaled(&self, other: &Self, a: f64) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(x, y)| x + y * a).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, 1.0)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            n: self.n,
            data: self.data.iter().map(|z| z * a).collect(),
        }
    }

    /// Linear combination `Σ aₖ Fₖ` of fields on one grid.
    pub fn combine(terms: &[(f64, &HermitianField)]) -> Result<Self> {
        let (a0, f0) = terms
            .first()
            .ok_or_else(|| Error::InvalidInput("empty combination".into()))?;
        let mut out = f0.scale(*a0);
        for (a, f) in &terms[1..] {
            out = out.add_scaled(f, *a)?;
        }
        Ok(out)
    }

    /// Pointwise determinant (real for Hermitian matrices).
    pub fn determinant(&self) -> PotentialField {
        let values = (0..self.grid.len())
            .into_par_iter()
            .map(|p| self.at(p).determinant().re)
            .collect();
        PotentialField {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Pointwise trace.
    pub fn trace(&self) -> PotentialField {
        let values = (0..self.grid.len())
            .map(|p| (0..self.n).map(|i| self.entry(p, i, i).re).sum())
            .collect();
        PotentialField {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Field of one entry `(i, j̄)`.
    pub fn entry_field(&self, i: usize, j: usize) -> Vec<Complex64> {
        (0..self.grid.len()).map(|p| self.entry(p, i, j)).collect()
    }
}
