use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of grid points.
pub const DEFAULT_POINT_BUDGET: usize = 1 << 22;

/// Uniform periodic grid on the real torus underlying `ℂⁿ/Λ`.
///
/// Real axes are ordered `x₁, y₁, x₂, y₂, …` (axis `2i` is `xᵢ₊₁`, axis
/// `2i + 1` is `yᵢ₊₁`). Values are stored with the last axis varying fastest.
/// An axis with resolution 1 is inactive: fields are constant along it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    complex_dim: usize,
    resolutions: Vec<usize>,
    periods: Vec<f64>,
}

impl TorusGrid {
    pub fn new(complex_dim: usize, resolutions: Vec<usize>, periods: Vec<f64>) -> Result<Self> {
        Self::with_budget(complex_dim, resolutions, periods, DEFAULT_POINT_BUDGET)
    }

    pub fn with_budget(complex_dim: usize, resolutions: Vec<usize>, periods: Vec<f64>, budget: usize) -> Result<Self> {
        if complex_dim == 0 {
            return Err(Error::InvalidGrid("complex dimension must be positive".into()));
        }
        let axes = 2 * complex_dim;
        if resolutions.len() != axes || periods.len() != axes {
            return Err(Error::InvalidGrid(format!(
                "expected {axes} resolutions and periods, got {} and {}",
                resolutions.len(),
                periods.len()
            )));
        }
        for (a, &r) in resolutions.iter().enumerate() {
            if r != 1 && r < 4 {
                return Err(Error::InvalidGrid(format!(
                    "axis {a}: resolution {r} (active axes need at least 4 points)"
                )));
            }
        }
        if let Some(p) = periods.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidGrid(format!("period {p} is not positive")));
        }
        let total = resolutions
            .iter()
            .try_fold(1usize, |acc, &r| acc.checked_mul(r))
            .filter(|&t| t <= budget)
            .ok_or_else(|| Error::InvalidGrid(format!("point count exceeds budget {budget}")))?;
        debug_assert!(total >= 1);
        Ok(Self {
            complex_dim,
            resolutions,
            periods,
        })
    }

    /// Grid with period 2π on every axis and `res` points on each listed
    /// active axis.
    pub fn reduced(complex_dim: usize, active_axes: &[usize], res: usize) -> Result<Self> {
        let mut resolutions = vec![1; 2 * complex_dim];
        for &a in active_axes {
            if a >= resolutions.len() {
                return Err(Error::InvalidGrid(format!("axis {a} out of range")));
            }
            resolutions[a] = res;
        }
        Self::new(complex_dim, resolutions, vec![TAU; 2 * complex_dim])
    }

    /// A single-point grid: every field is constant.
    pub fn point(complex_dim: usize) -> Result<Self> {
        Self::reduced(complex_dim, &[], 1)
    }

    pub fn complex_dim(&self) -> usize {
        self.complex_dim
    }

    pub fn real_axes(&self) -> usize {
        2 * self.complex_dim
    }

    pub fn resolutions(&self) -> &[usize] {
        &self.resolutions
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn is_active(&self, axis: usize) -> bool {
        self.resolutions[axis] > 1
    }

    pub fn active_axes(&self) -> Vec<usize> {
        (0..self.real_axes()).filter(|&a| self.is_active(a)).collect()
    }

    pub fn len(&self) -> usize {
        self.resolutions.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn total_volume(&self) -> f64 {
        self.periods.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.periods
            .iter()
            .zip(&self.resolutions)
            .map(|(p, &r)| p / r as f64)
            .product()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.resolutions.len()];
        for a in (0..self.resolutions.len().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.resolutions[a + 1];
        }
        s
    }

    /// Multi-index of a flat point index.
    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.resolutions.len()];
        for a in (0..self.resolutions.len()).rev() {
            out[a] = idx % self.resolutions[a];
            idx /= self.resolutions[a];
        }
        out
    }

    /// Real coordinates of a flat point index.
    pub fn coordinates(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .enumerate()
            .map(|(a, &i)| i as f64 * self.periods[a] / self.resolutions[a] as f64)
            .collect()
    }

    /// Wavenumber `2π m / L` of discrete mode index `i` on `axis`, with `m`
    /// folded into `(−N/2, N/2]`.
    pub fn wavenumber(&self, axis: usize, i: usize) -> f64 {
        let n = self.resolutions[axis];
        let m = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
        TAU * m / self.periods[axis]
    }

    /// Whether mode index `i` on `axis` is the unpaired Nyquist mode.
    pub fn is_nyquist(&self, axis: usize, i: usize) -> bool {
        let n = self.resolutions[axis];
        n > 1 && n.is_multiple_of(2) && i == n / 2
    }

    pub fn ensure_same(&self, other: &TorusGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(TorusGrid::reduced(1, &[0], 3).is_err());
        assert!(TorusGrid::reduced(1, &[0], 4).is_ok());
        assert!(TorusGrid::new(1, vec![4], vec![TAU]).is_err());
        assert!(TorusGrid::with_budget(2, vec![8; 4], vec![TAU; 4], 1000).is_err());
        assert!(TorusGrid::new(1, vec![4, 4], vec![TAU, -1.0]).is_err());
    }

    #[test]
    fn layout_is_last_axis_fastest() {
        let g = TorusGrid::new(1, vec![4, 6], vec![TAU, TAU]).unwrap();
        assert_eq!(g.strides(), vec![6, 1]);
        assert_eq!(g.multi_index(7), vec![1, 1]);
        assert_eq!(g.len(), 24);
        let c = g.coordinates(7);
        assert!((c[0] - TAU / 4.0).abs() < 1e-15 && (c[1] - TAU / 6.0).abs() < 1e-15);
    }

    #[test]
    fn volumes() {
        let g = TorusGrid::reduced(2, &[0, 3], 8).unwrap();
        assert!((g.total_volume() - TAU.powi(4)).abs() < 1e-9);
        assert!((g.cell_volume() * g.len() as f64 - g.total_volume()).abs() < 1e-9);
        assert_eq!(g.active_axes(), vec![0, 3]);
    }

    #[test]
    fn wavenumbers_fold() {
        let g = TorusGrid::reduced(1, &[0], 8).unwrap();
        let ks: Vec<f64> = (0..8).map(|i| g.wavenumber(0, i)).collect();
        assert_eq!(ks, vec![0.0, 1.0, 2.0, 3.0, 4.0, -3.0, -2.0, -1.0]);
        assert!(g.is_nyquist(0, 4) && !g.is_nyquist(0, 3));
    }
}
