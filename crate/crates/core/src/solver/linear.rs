//! Restarted GMRES with right preconditioning.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresParams {
    /// Target `‖b − Ax‖ / ‖b‖`.
    pub tol: f64,
    pub restart: usize,
    pub max_iters: usize,
    /// Accept the iterate if the tolerance is missed but this relative
    /// residual is reached.
    pub accept: f64,
}

impl Default for GmresParams {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            restart: 60,
            max_iters: 600,
            accept: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` as `A M y = b`, `x = M y`, starting from `x = 0`.
pub fn gmres(
    apply_a: impl Fn(&[f64]) -> Vec<f64>,
    apply_m: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    params: &GmresParams,
) -> Result<GmresOutcome> {
    let len = b.len();
    let b_norm = norm(b);
    let mut x = vec![0.0; len];
    if b_norm == 0.0 {
        return Ok(GmresOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let m = params.restart.max(1);
    let mut total = 0;
    let mut rel = 1.0;
    let mut r = b.to_vec();
    while total < params.max_iters {
        let beta = norm(&r);
        rel = beta / b_norm;
        if rel <= params.tol {
            break;
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            if total >= params.max_iters {
                break;
            }
            total += 1;
            let z = apply_m(&basis[k]);
            let mut w = apply_a(&z);
            for (j, v) in basis.iter().enumerate() {
                let hjk = dot(&w, v);
                h[j][k] = hjk;
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= hjk * vi;
                }
            }
            let w_norm = norm(&w);
            h[k + 1][k] = w_norm;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            rel = g[k + 1].abs() / b_norm;
            if rel <= params.tol || w_norm == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / w_norm).collect());
        }
        // Back substitution on the k_used × k_used triangle.
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut dy = vec![0.0; len];
        for (j, yj) in y.iter().enumerate() {
            for (d, v) in dy.iter_mut().zip(&basis[j]) {
                *d += yj * v;
            }
        }
        let dx = apply_m(&dy);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        let ax = apply_a(&x);
        r = b.iter().zip(&ax).map(|(bi, a)| bi - a).collect();
        rel = norm(&r) / b_norm;
        if rel <= params.tol || k_used == 0 {
            break;
        }
    }
    if rel > params.tol && rel > params.accept {
        return Err(Error::LinearSolveFailure {
            iterations: total,
            relative_residual: rel,
        });
    }
    Ok(GmresOutcome {
        x,
        iterations: total,
        relative_residual: rel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonsymmetric_system() {
        let a = [[4.0, 1.0, 0.0], [2.0, 5.0, 1.0], [0.0, -1.0, 3.0]];
        let apply = |x: &[f64]| (0..3).map(|i| dot(&a[i], x)).collect::<Vec<_>>();
        let b = [1.0, 2.0, 3.0];
        let out = gmres(
            apply,
            |x| x.to_vec(),
            &b,
            &GmresParams {
                tol: 1e-13,
                ..Default::default()
            },
        )
        .unwrap();
        let r = apply(&out.x);
        for i in 0..3 {
            assert!((r[i] - b[i]).abs() < 1e-12);
        }
        assert!(out.iterations <= 3);
    }

    #[test]
    fn preconditioner_is_applied_on_the_right() {
        let d = [1.0, 10.0, 100.0, 1000.0];
        let apply = |x: &[f64]| x.iter().zip(&d).map(|(a, b)| a * b).collect::<Vec<_>>();
        let inv = |x: &[f64]| x.iter().zip(&d).map(|(a, b)| a / b).collect::<Vec<_>>();
        let b = [1.0, 1.0, 1.0, 1.0];
        let out = gmres(apply, inv, &b, &GmresParams::default()).unwrap();
        assert_eq!(out.iterations, 1);
        assert!((out.x[3] - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn restarts_and_reports_failure() {
        let n = 50;
        let apply = |x: &[f64]| {
            (0..n)
                .map(|i| 2.0 * x[i] - if i > 0 { x[i - 1] } else { 0.0 } - if i + 1 < n { x[i + 1] } else { 0.0 })
                .collect::<Vec<_>>()
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let p = GmresParams {
            tol: 1e-10,
            restart: 10,
            max_iters: 2000,
            accept: 0.0,
        };
        let out = gmres(apply, |x| x.to_vec(), &b, &p).unwrap();
        assert!(out.relative_residual <= 1e-10);
        let p = GmresParams {
            tol: 1e-14,
            restart: 2,
            max_iters: 4,
            accept: 0.0,
        };
        assert!(matches!(
            gmres(apply, |x| x.to_vec(), &b, &p),
            Err(Error::LinearSolveFailure { .. })
        ));
    }

    #[test]
    fn zero_rhs() {
        let out = gmres(|x| x.to_vec(), |x| x.to_vec(), &[0.0; 4], &GmresParams::default()).unwrap();
        assert_eq!(out.x, vec![0.0; 4]);
    }
}
