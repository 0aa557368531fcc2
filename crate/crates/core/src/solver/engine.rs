//! Damped Newton iteration for pointwise eigenvalue equations
//! `F(λ(A + √−1∂∂̄u), u) = 0` on the torus.
//!
//! The linearization in direction `ψ` is `Σ Cᵢⱼ (∂ᵢ∂̄ⱼψ) + κψ` with
//! `C = Σₖ (∂F/∂λₖ) v̄ₖ vₖᵀ` built from `ω`-orthonormal eigenvectors. It is
//! solved by GMRES preconditioned with the inverse of the constant-coefficient
//! operator obtained by averaging `C` over the grid.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::linear::{gmres, GmresParams};
use super::SolveConfig;
use crate::error::{Error, Result};
use crate::numeric::compensated_sum_by;
use crate::torus::{pair_index, point_eigen, HermitianField, PotentialField, Spectral};

/// Eigenvalues closer than this (relative) share an averaged coefficient.
pub const CLUSTER_TOL: f64 = 1e-9;

/// Pointwise law evaluated at sorted eigenvalues.
pub(crate) struct PointValue {
    pub residual: f64,
    /// Residual is reported divided by this positive scale.
    pub scale: f64,
    /// `∂F/∂λₖ`, same order as the eigenvalues.
    pub gradient: Vec<f64>,
    /// Admissibility margin; iterates need `margin ≥ safety`.
    pub margin: f64,
}

pub(crate) trait PointLaw: Sync {
    fn eval(&self, point: usize, lambda: &[f64], u: f64) -> Option<PointValue>;
    /// Coefficient `κ` of the zeroth-order term.
    fn zeroth_order(&self) -> f64;
    /// Whether the equation is posed modulo constants (range has zero mean).
    fn mean_free(&self) -> bool;
    fn safety(&self) -> f64;
    fn exit_error(&self, point: usize, margin: f64) -> Error;
}

pub(crate) struct Evaluation {
    pub residual: Vec<f64>,
    pub scale: Vec<f64>,
    /// Packed upper-triangle coefficients `Cᵢⱼ`, pair-major.
    pub coef: Vec<Vec<Complex64>>,
    pub margin_min: f64,
    pub worst_point: usize,
    pub trace_min: f64,
    pub lambda_min: f64,
}

pub(crate) struct Engine<'a, L: PointLaw> {
    pub law: &'a L,
    pub spectral: Spectral,
    pub base: &'a HermitianField,
    pub omega: &'a HermitianField,
    /// `ωⁿ` weights normalized to sum 1.
    pub weights: Vec<f64>,
    pub config: &'a SolveConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct EngineOutcome {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub linear_iterations: usize,
    /// Sup of the (mean-projected, when mean-free) scaled residual.
    pub residual_sup: f64,
    /// Sup of the scaled residual without projection.
    pub raw_residual_sup: f64,
    /// `ωⁿ`-average of the unscaled residual.
    pub mean_residual: f64,
    pub margin_min: f64,
    pub trace_min: f64,
    pub lambda_min: f64,
    pub history: Vec<f64>,
}

fn average_clusters(lambda: &[f64], grad: &mut [f64]) {
    let n = lambda.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (lambda[end - 1] - lambda[end]).abs() <= CLUSTER_TOL * lambda[end - 1].abs().max(1.0) {
            end += 1;
        }
        if end - start > 1 {
            let avg = grad[start..end].iter().sum::<f64>() / (end - start) as f64;
            grad[start..end].iter_mut().for_each(|g| *g = avg);
        }
        start = end;
    }
}

impl<'a, L: PointLaw> Engine<'a, L> {
    pub fn new(law: &'a L, base: &'a HermitianField, omega: &'a HermitianField, config: &'a SolveConfig) -> Self {
        let det = omega.determinant();
        let total = compensated_sum_by(det.values().len(), |i| det.values()[i]);
        let weights = det.values().iter().map(|d| d / total).collect();
        Self {
            law,
            spectral: Spectral::new(base.grid()),
            base,
            omega,
            weights,
            config,
        }
    }

    pub fn weighted_mean(&self, v: &[f64]) -> f64 {
        compensated_sum_by(v.len(), |i| self.weights[i] * v[i])
    }

    fn lebesgue_mean(v: &[f64]) -> f64 {
        compensated_sum_by(v.len(), |i| v[i]) / v.len() as f64
    }

    /// Evaluates the law at `u`; `None` if an eigenproblem fails or the law
    /// rejects a point.
    pub fn evaluate(&self, u: &[f64]) -> Option<Evaluation> {
        let grid = self.base.grid();
        let n = grid.complex_dim();
        let phi = PotentialField::new(grid.clone(), u.to_vec()).ok()?;
        let x = self.base.add(&self.spectral.complex_hessian(&phi)).ok()?;
        let pairs = n * (n + 1) / 2;
        type PointOut = (PointValue, Vec<Complex64>, f64, f64);
        let per_point: Vec<Option<PointOut>> = (0..grid.len())
            .into_par_iter()
            .map(|p| {
                let e = point_eigen(&x.at(p), &self.omega.at(p))?;
                let mut v = self.law.eval(p, &e.values, u[p])?;
                average_clusters(&e.values, &mut v.gradient);
                let coef = coefficients(&e.vectors, &v.gradient, pairs);
                let trace: f64 = e.values.iter().sum();
                let lmin = e.values[n - 1];
                Some((v, coef, trace, lmin))
            })
            .collect();
        let len = grid.len();
        let mut ev = Evaluation {
            residual: Vec::with_capacity(len),
            scale: Vec::with_capacity(len),
            coef: vec![Vec::with_capacity(len); pairs],
            margin_min: f64::INFINITY,
            worst_point: 0,
            trace_min: f64::INFINITY,
            lambda_min: f64::INFINITY,
        };
        for (p, item) in per_point.into_iter().enumerate() {
            let (v, coef, trace, lmin) = item?;
            if v.margin < ev.margin_min {
                ev.margin_min = v.margin;
                ev.worst_point = p;
            }
            ev.trace_min = ev.trace_min.min(trace);
            ev.lambda_min = ev.lambda_min.min(lmin);
            ev.residual.push(v.residual);
            ev.scale.push(v.scale);
            for (k, c) in coef.into_iter().enumerate() {
                ev.coef[k].push(c);
            }
        }
        Some(ev)
    }

    /// Scaled residual, mean-projected when the law is mean-free.
    pub fn residual_sup(&self, ev: &Evaluation) -> f64 {
        let shift = if self.law.mean_free() {
            self.weighted_mean(&ev.residual)
        } else {
            0.0
        };
        ev.residual
            .iter()
            .zip(&ev.scale)
            .fold(0.0_f64, |m, (r, s)| m.max(((r - shift) / s).abs()))
    }

    fn raw_residual_sup(ev: &Evaluation) -> f64 {
        ev.residual
            .iter()
            .zip(&ev.scale)
            .fold(0.0_f64, |m, (r, s)| m.max((r / s).abs()))
    }

    /// `Σ Cᵢⱼ ∂ᵢ∂̄ⱼψ + κψ`.
    pub fn apply_linearization(&self, coef: &[Vec<Complex64>], psi: &[f64]) -> Vec<f64> {
        let n = self.base.dim();
        let entries = self.spectral.hessian_entries(psi);
        let kappa = self.law.zeroth_order();
        (0..psi.len())
            .map(|p| {
                let mut acc = kappa * psi[p];
                for i in 0..n {
                    for j in i..n {
                        let k = pair_index(n, i, j);
                        let term = (coef[k][p] * entries[k][p]).re;
                        acc += if i == j { term } else { 2.0 * term };
                    }
                }
                acc
            })
            .collect()
    }

    fn preconditioner_symbol(&self, coef: &[Vec<Complex64>]) -> Vec<f64> {
        let n = self.base.dim();
        let len = self.base.grid().len();
        let mean: Vec<Complex64> = coef
            .iter()
            .map(|c| {
                let re = compensated_sum_by(len, |p| c[p].re) / len as f64;
                let im = compensated_sum_by(len, |p| c[p].im) / len as f64;
                Complex64::new(re, im)
            })
            .collect();
        let kappa = self.law.zeroth_order();
        (0..len)
            .map(|q| {
                let mut s = kappa;
                for i in 0..n {
                    for j in i..n {
                        let k = pair_index(n, i, j);
                        let term = (mean[k] * self.spectral.hessian_symbol(i, j)[q]).re;
                        s += if i == j { term } else { 2.0 * term };
                    }
                }
                s
            })
            .collect()
    }

    /// Newton step direction for the current evaluation.
    fn direction(&self, ev: &Evaluation) -> Result<(Vec<f64>, usize)> {
        let mean_free = self.law.mean_free();
        let project = |v: Vec<f64>| -> Vec<f64> {
            if mean_free {
                let m = self.weighted_mean(&v);
                v.into_iter().map(|x| x - m).collect()
            } else {
                v
            }
        };
        let rhs = project(ev.residual.iter().map(|r| -r).collect());
        let symbol = self.preconditioner_symbol(&ev.coef);
        let inv: Vec<f64> = symbol
            .iter()
            .map(|&s| if s.abs() > 1e-14 { 1.0 / s } else { 0.0 })
            .collect();
        let apply_m = |v: &[f64]| {
            let out = self.spectral.apply_real_symbol(v, &inv);
            if mean_free {
                let m = Self::lebesgue_mean(&out);
                out.into_iter().map(|x| x - m).collect()
            } else {
                out
            }
        };
        let apply_a = |v: &[f64]| project(self.apply_linearization(&ev.coef, v));
        let params = GmresParams {
            tol: self.config.linear_tol,
            restart: self.config.gmres_restart,
            max_iters: self.config.gmres_max_iters,
            ..Default::default()
        };
        let out = gmres(apply_a, apply_m, &rhs, &params)?;
        Ok((out.x, out.iterations))
    }

    pub fn solve(&self, u0: &[f64]) -> Result<EngineOutcome> {
        let mean_free = self.law.mean_free();
        let mut u = u0.to_vec();
        if mean_free {
            let m = Self::lebesgue_mean(&u);
            u.iter_mut().for_each(|x| *x -= m);
        }
        let safety = self.law.safety();
        let mut ev = match self.evaluate(&u) {
            Some(ev) => ev,
            None => return Err(self.law.exit_error(0, f64::NAN)),
        };
        if ev.margin_min < safety {
            return Err(self.law.exit_error(ev.worst_point, ev.margin_min));
        }
        let mut res = self.residual_sup(&ev);
        let mut history = vec![res];
        let mut linear_iterations = 0;
        for iteration in 1..=self.config.max_newton {
            if res <= self.config.residual_tol {
                return Ok(EngineOutcome {
                    raw_residual_sup: Self::raw_residual_sup(&ev),
                    mean_residual: self.weighted_mean(&ev.residual),
                    u,
                    iterations: iteration,
                    linear_iterations,
                    residual_sup: res,
                    margin_min: ev.margin_min,
                    trace_min: ev.trace_min,
                    lambda_min: ev.lambda_min,
                    history,
                });
            }
            if iteration == self.config.max_newton {
                break;
            }
            let (delta, lin) = self.direction(&ev)?;
            linear_iterations += lin;
            let mut alpha = 1.0;
            let mut accepted = None;
            let mut saw_admissible = false;
            let mut last_bad = (ev.worst_point, ev.margin_min);
            for _ in 0..=self.config.max_halvings {
                let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + alpha * d).collect();
                if let Some(tev) = self.evaluate(&trial) {
                    if tev.margin_min >= safety {
                        saw_admissible = true;
                        let tres = self.residual_sup(&tev);
                        if tres < res {
                            accepted = Some((trial, tev, tres));
                            break;
                        }
                    } else {
                        last_bad = (tev.worst_point, tev.margin_min);
                    }
                }
                alpha *= self.config.damping;
            }
            match accepted {
                Some((trial, tev, tres)) => {
                    u = trial;
                    ev = tev;
                    res = tres;
                    history.push(res);
                }
                None if saw_admissible => {
                    return Err(Error::NoConvergence {
                        iterations: iteration,
                        residual: res,
                    })
                }
                None => return Err(self.law.exit_error(last_bad.0, last_bad.1)),
            }
        }
        Err(Error::NoConvergence {
            iterations: self.config.max_newton,
            residual: res,
        })
    }
}

/// Packed `Cᵢⱼ = Σₖ gₖ conj(vₖ[i]) vₖ[j]` for `i ≤ j`.
fn coefficients(vectors: &DMatrix<Complex64>, grad: &[f64], pairs: usize) -> Vec<Complex64> {
    let n = vectors.nrows();
    let mut out = vec![Complex64::new(0.0, 0.0); pairs];
    for i in 0..n {
        for j in i..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, g) in grad.iter().enumerate() {
                acc += vectors[(i, k)].conj() * vectors[(j, k)] * *g;
            }
            out[pair_index(n, i, j)] = acc;
        }
    }
    out
}
