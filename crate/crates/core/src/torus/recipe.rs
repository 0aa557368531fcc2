//! Declarative descriptions of closed real (1,1)-forms and scalar fields.
//!
//! A form is a constant Hermitian matrix plus `√−1∂∂̄ρ` for a trigonometric
//! potential `ρ`, so closedness holds by construction.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{HermitianField, PotentialField};
use super::grid::TorusGrid;
use super::spectral::Spectral;
use crate::error::{Error, Result};

/// `amplitude · cos(Σₐ waveₐ · 2π xₐ / Lₐ + phase)`; `wave` has one integer
/// per real axis (`x₁, y₁, x₂, y₂, …`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub amplitude: f64,
    pub wave: Vec<i32>,
    #[serde(default)]
    pub phase: f64,
}

impl FourierMode {
    pub fn cosine(amplitude: f64, wave: Vec<i32>) -> Self {
        Self {
            amplitude,
            wave,
            phase: 0.0,
        }
    }

    fn eval(&self, grid: &TorusGrid, x: &[f64]) -> f64 {
        let arg: f64 = self
            .wave
            .iter()
            .zip(x)
            .zip(grid.periods())
            .map(|((&m, &xa), &l)| m as f64 * std::f64::consts::TAU * xa / l)
            .sum();
        self.amplitude * (arg + self.phase).cos()
    }
}

/// Constant plus a finite sum of Fourier modes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScalarRecipe {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub modes: Vec<FourierMode>,
}

impl ScalarRecipe {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            modes: Vec::new(),
        }
    }

    pub fn with_mode(mut self, mode: FourierMode) -> Self {
        self.modes.push(mode);
        self
    }

    pub fn validate(&self, grid: &TorusGrid) -> Result<()> {
        for m in &self.modes {
            if m.wave.len() != grid.real_axes() {
                return Err(Error::InvalidInput(format!(
                    "mode needs {} wave numbers, got {}",
                    grid.real_axes(),
                    m.wave.len()
                )));
            }
            for (a, &k) in m.wave.iter().enumerate() {
                if k != 0 && !grid.is_active(a) {
                    return Err(Error::InvalidInput(format!("mode varies along inactive axis {a}")));
                }
            }
            if !m.amplitude.is_finite() || !m.phase.is_finite() {
                return Err(Error::InvalidInput("non-finite mode parameters".into()));
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, grid: &TorusGrid) -> Result<PotentialField> {
        self.validate(grid)?;
        PotentialField::from_fn(grid, |x| {
            self.constant + self.modes.iter().map(|m| m.eval(grid, x)).sum::<f64>()
        })
    }
}

/// Constant part of a form, relative to the standard flat metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstantMatrix {
    Identity,
    ScaledIdentity {
        factor: f64,
    },
    Diagonal {
        entries: Vec<f64>,
    },
    /// Full Hermitian matrix given by real and imaginary parts (row-major).
    Hermitian {
        re: Vec<Vec<f64>>,
        im: Vec<Vec<f64>>,
    },
}

impl ConstantMatrix {
    pub fn matrix(&self, n: usize) -> Result<DMatrix<Complex64>> {
        let c = |x: f64| Complex64::new(x, 0.0);
        match self {
            Self::Identity => Ok(DMatrix::from_diagonal_element(n, n, c(1.0))),
            Self::ScaledIdentity { factor } => Ok(DMatrix::from_diagonal_element(n, n, c(*factor))),
            Self::Diagonal { entries } => {
                if entries.len() != n {
                    return Err(Error::InvalidInput(format!("expected {n} diagonal entries")));
                }
                Ok(DMatrix::from_fn(
                    n,
                    n,
                    |i, j| if i == j { c(entries[i]) } else { c(0.0) },
                ))
            }
            Self::Hermitian { re, im } => {
                let ok = re.len() == n && im.len() == n && re.iter().chain(im.iter()).all(|r| r.len() == n);
                if !ok {
                    return Err(Error::InvalidInput(format!(
                        "expected {n}x{n} real and imaginary parts"
                    )));
                }
                Ok(DMatrix::from_fn(n, n, |i, j| Complex64::new(re[i][j], im[i][j])))
            }
        }
    }
}

/// A closed real (1,1)-form: constant matrix plus `√−1∂∂̄` of a potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldRecipe {
    pub constant: ConstantMatrix,
    #[serde(default)]
    pub potential: ScalarRecipe,
}

impl FieldRecipe {
    pub fn identity() -> Self {
        Self::scaled_identity(1.0)
    }

    pub fn scaled_identity(factor: f64) -> Self {
        Self {
            constant: ConstantMatrix::ScaledIdentity { factor },
            potential: ScalarRecipe::default(),
        }
    }

    pub fn diagonal(entries: Vec<f64>) -> Self {
        Self {
            constant: ConstantMatrix::Diagonal { entries },
            potential: ScalarRecipe::default(),
        }
    }

    pub fn with_potential(mut self, potential: ScalarRecipe) -> Self {
        self.potential = potential;
        self
    }

    pub fn build(&self, grid: &TorusGrid) -> Result<HermitianField> {
        let base = HermitianField::constant(grid, &self.constant.matrix(grid.complex_dim())?)?;
        if self.potential.modes.is_empty() {
            return Ok(base);
        }
        let rho = self.potential.evaluate(grid)?;
        base.add(&Spectral::new(grid).complex_hessian(&rho))
    }
}
