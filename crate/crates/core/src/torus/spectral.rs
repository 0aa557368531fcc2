//! Fourier differentiation on the torus grid.
//!
//! The complex Hessian uses `∂ᵢ∂̄ⱼ = ¼[∂xᵢ∂xⱼ + ∂yᵢ∂yⱼ + i(∂xᵢ∂yⱼ − ∂yᵢ∂xⱼ)]`.
//! Each real second derivative `∂a∂b` has symbol `−k_a k_b`; for `a ≠ b` the
//! unpaired Nyquist mode is dropped so the result stays real.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::{HermitianField, PotentialField};
use super::grid::TorusGrid;

type Plan = Arc<dyn Fft<f64>>;

/// FFT plans and Hessian symbols for one grid.
pub struct Spectral {
    grid: TorusGrid,
    plans: Vec<Option<(Plan, Plan)>>,
    /// Symbols of the entries `(i, j̄)` with `i ≤ j`, in `pair_index` order.
    symbols: Vec<Vec<Complex64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

/// Position of the pair `(i, j)`, `i ≤ j`, in the packed upper triangle.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * n - i * (i + 1) / 2 + j
}

impl Spectral {
    pub fn new(grid: &TorusGrid) -> Self {
        let mut planner = FftPlanner::new();
        let plans = grid
            .resolutions()
            .iter()
            .map(|&r| (r > 1).then(|| (planner.plan_fft_forward(r), planner.plan_fft_inverse(r))))
            .collect();
        let n = grid.complex_dim();
        let len = grid.len();
        let mut symbols = Vec::with_capacity(n * (n + 1) / 2);
        let mut modes = Vec::with_capacity(len);
        for p in 0..len {
            modes.push(grid.multi_index(p));
        }
        let second = |a: usize, b: usize, mi: &[usize]| -> f64 {
            if a != b && (grid.is_nyquist(a, mi[a]) || grid.is_nyquist(b, mi[b])) {
                return 0.0;
            }
            -grid.wavenumber(a, mi[a]) * grid.wavenumber(b, mi[b])
        };
        for i in 0..n {
            for j in i..n {
                let (xi, yi, xj, yj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
                let s = modes
                    .iter()
                    .map(|mi| {
                        let re = second(xi, xj, mi) + second(yi, yj, mi);
                        let im = second(xi, yj, mi) - second(yi, xj, mi);
                        Complex64::new(0.25 * re, 0.25 * im)
                    })
                    .collect();
                symbols.push(s);
            }
        }
        Self {
            grid: grid.clone(),
            plans,
            symbols,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Symbol of the Hessian entry `(i, j̄)`, `i ≤ j`.
    pub fn hessian_symbol(&self, i: usize, j: usize) -> &[Complex64] {
        &self.symbols[pair_index(self.grid.complex_dim(), i, j)]
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let res = self.grid.resolutions();
        let strides = self.grid.strides();
        let total = buf.len();
        for (a, plan) in self.plans.iter().enumerate() {
            let Some((fwd, inv)) = plan else { continue };
            let plan = if inverse { inv } else { fwd };
            let r = res[a];
            let stride = strides[a];
            let block = r * stride;
            let mut line = vec![Complex64::new(0.0, 0.0); r];
            let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            for base in (0..total).step_by(block) {
                for q in 0..stride {
                    let start = base + q;
                    for (k, z) in line.iter_mut().enumerate() {
                        *z = buf[start + k * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (k, z) in line.iter().enumerate() {
                        buf[start + k * stride] = *z;
                    }
                }
            }
        }
        if inverse {
            let scale = 1.0 / total as f64;
            for z in buf.iter_mut() {
                *z *= scale;
            }
        }
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, false);
        buf
    }

    /// Normalized inverse transform.
    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<Complex64> {
        self.transform(&mut spectrum, true);
        spectrum
    }

    /// Applies a real Fourier multiplier to a real field.
    pub fn apply_real_symbol(&self, values: &[f64], symbol: &[f64]) -> Vec<f64> {
        let mut hat = self.forward(values);
        for (z, s) in hat.iter_mut().zip(symbol) {
            *z *= s;
        }
        self.inverse(hat).into_iter().map(|z| z.re).collect()
    }

    /// All entries `(i, j̄)`, `i ≤ j`, of the complex Hessian of a real field,
    /// in `pair_index` order.
    pub fn hessian_entries(&self, values: &[f64]) -> Vec<Vec<Complex64>> {
        let hat = self.forward(values);
        self.symbols
            .iter()
            .map(|s| {
                let prod: Vec<Complex64> = hat.iter().zip(s).map(|(h, s)| h * s).collect();
                let mut out = self.inverse(prod);
                // Diagonal entries are real by construction.
                if s.iter().all(|z| z.im == 0.0) {
                    for z in out.iter_mut() {
                        z.im = 0.0;
                    }
                }
                out
            })
            .collect()
    }

    /// `√−1∂∂̄φ` as a Hermitian field. Each unordered pair is computed once, so
    /// the output is exactly Hermitian.
    pub fn complex_hessian(&self, phi: &PotentialField) -> HermitianField {
        let n = self.grid.complex_dim();
        let entries = self.hessian_entries(phi.values());
        let len = self.grid.len();
        let mut data = vec![Complex64::new(0.0, 0.0); len * n * n];
        for i in 0..n {
            for j in i..n {
                let e = &entries[pair_index(n, i, j)];
                for p in 0..len {
                    let base = p * n * n;
                    if i == j {
                        data[base + i * n + i] = Complex64::new(e[p].re, 0.0);
                    } else {
                        data[base + j * n + i] = e[p];
                        data[base + i * n + j] = e[p].conj();
                    }
                }
            }
        }
        HermitianField::from_data_unchecked(self.grid.clone(), data)
    }

    /// Real partial derivatives along every real axis (zero on inactive
    /// axes). The Nyquist mode is dropped.
    pub fn real_partials(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let hat = self.forward(values);
        let modes: Vec<Vec<usize>> = (0..self.grid.len()).map(|p| self.grid.multi_index(p)).collect();
        (0..self.grid.real_axes())
            .map(|a| {
                if !self.grid.is_active(a) {
                    return vec![0.0; values.len()];
                }
                let prod: Vec<Complex64> = hat
                    .iter()
                    .zip(&modes)
                    .map(|(h, mi)| {
                        if self.grid.is_nyquist(a, mi[a]) {
                            Complex64::new(0.0, 0.0)
                        } else {
                            h * Complex64::new(0.0, self.grid.wavenumber(a, mi[a]))
                        }
                    })
                    .collect();
                self.inverse(prod).into_iter().map(|z| z.re).collect()
            })
            .collect()
    }

    /// `∂φ/∂zᵢ = ½(∂φ/∂xᵢ − √−1 ∂φ/∂yᵢ)` for each complex direction.
    pub fn complex_gradient(&self, values: &[f64]) -> Vec<Vec<Complex64>> {
        let d = self.real_partials(values);
        (0..self.grid.complex_dim())
            .map(|i| {
                d[2 * i]
                    .iter()
                    .zip(&d[2 * i + 1])
                    .map(|(&x, &y)| Complex64::new(0.5 * x, -0.5 * y))
                    .collect()
            })
            .collect()
    }
}

/// `√−1∂∂̄φ` by Fourier differentiation.
pub fn complex_hessian(phi: &PotentialField) -> HermitianField {
    Spectral::new(phi.grid()).complex_hessian(phi)
}
