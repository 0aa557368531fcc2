//! Pointwise algebra of the Lagrangian phase operator.
//!
//! Everything here acts on a single eigenvalue vector. The shifted operator is
//! `g(λ) = (Re Π(λᵢ + i) − b) / Im Π(λᵢ + i)`, which reduces to `cot Θ(λ)`
//! when `b = 0`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Partial products larger than this are rejected.
pub const MAX_PRODUCT_MAGNITUDE: f64 = 1e150;

/// `im < NEAR_BOUNDARY_RATIO * P` marks an evaluation as close to `Θ = π`.
pub const NEAR_BOUNDARY_RATIO: f64 = 1e-12;

/// Eigenvalues of a Hermitian form relative to the Kähler form, sorted
/// non-increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    /// Validates and sorts descending.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSpectrum("empty spectrum".into()));
        }
        if let Some(x) = values.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidSpectrum(format!("non-finite entry {x}")));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { values })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec())
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn largest(&self) -> f64 {
        self.values[0]
    }

    pub fn smallest(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

impl TryFrom<Vec<f64>> for Spectrum {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Spectrum> for Vec<f64> {
    fn from(s: Spectrum) -> Self {
        s.values
    }
}

/// The pair `(θ₀, Θ₀)` with `0 < θ₀ < Θ₀ < π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseWindow {
    pub theta0: f64,
    pub big_theta0: f64,
}

impl PhaseWindow {
    pub fn new(theta0: f64, big_theta0: f64) -> Result<Self> {
        let ok = theta0.is_finite() && big_theta0.is_finite() && 0.0 < theta0 && theta0 < big_theta0 && big_theta0 < PI;
        if !ok {
            return Err(Error::InvalidWindow { theta0, big_theta0 });
        }
        Ok(Self { theta0, big_theta0 })
    }

    /// Upper phase bound defaults to the midpoint of `(θ₀, π)`.
    pub fn with_default_upper(theta0: f64) -> Result<Self> {
        Self::new(theta0, 0.5 * (theta0 + PI))
    }

    pub fn cot_theta0(&self) -> f64 {
        cot(self.theta0)
    }
}

pub fn cot(theta: f64) -> f64 {
    theta.cos() / theta.sin()
}

/// Branch of arccot with values in `(0, π)`.
pub fn arccot(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidInput(format!("arccot of non-finite value {x}")));
    }
    Ok(arccot_unchecked(x))
}

#[inline]
pub(crate) fn arccot_unchecked(x: f64) -> f64 {
    FRAC_PI_2 - x.atan()
}

/// `Θ(λ) = Σ arccot λᵢ`.
pub fn lagrangian_phase(lambda: &Spectrum) -> f64 {
    lambda.values.iter().map(|&x| arccot_unchecked(x)).sum()
}

/// `(Re, Im)` of `Π(λᵢ + i)` by incremental complex multiplication.
pub fn sigma_product(lambda: &Spectrum) -> Result<(f64, f64)> {
    let p = product_of(lambda.values.iter().copied())?;
    Ok((p.re, p.im))
}

fn product_of(xs: impl Iterator<Item = f64>) -> Result<Complex64> {
    let mut p = Complex64::new(1.0, 0.0);
    for x in xs {
        p *= Complex64::new(x, 1.0);
        let m = p.norm();
        if !(m <= MAX_PRODUCT_MAGNITUDE) {
            return Err(Error::Magnitude { magnitude: m });
        }
    }
    Ok(p)
}

/// `P = Π √(1 + λᵢ²)`, the modulus of `Π(λᵢ + i)`.
pub fn product_modulus(lambda: &Spectrum) -> f64 {
    lambda.values.iter().map(|&x| x.hypot(1.0)).product()
}

/// Full evaluation of the shifted operator at one spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorEval {
    pub value: f64,
    pub re: f64,
    pub im: f64,
    pub phase: f64,
    /// `im` is below `NEAR_BOUNDARY_RATIO · P`.
    pub near_boundary: bool,
}

pub fn operator_eval(lambda: &Spectrum, b: f64) -> Result<OperatorEval> {
    let phase = lagrangian_phase(lambda);
    let (re, im) = sigma_product(lambda)?;
    if !(phase > 0.0 && phase < PI) || im <= 0.0 {
        return Err(Error::PhaseOutOfRange { phase });
    }
    let modulus = product_modulus(lambda);
    Ok(OperatorEval {
        value: (re - b) / im,
        re,
        im,
        phase,
        near_boundary: im < NEAR_BOUNDARY_RATIO * modulus,
    })
}

/// `(re − b) / im`.
pub fn operator_value(lambda: &Spectrum, b: f64) -> Result<f64> {
    operator_eval(lambda, b).map(|e| e.value)
}

/// `Π_{j≠k}(λⱼ + i)` for every k, via prefix and suffix products.
fn leave_one_out_products(xs: &[f64]) -> Vec<Complex64> {
    let n = xs.len();
    let mut prefix = vec![Complex64::new(1.0, 0.0); n + 1];
    for (k, &x) in xs.iter().enumerate() {
        prefix[k + 1] = prefix[k] * Complex64::new(x, 1.0);
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let mut suffix = Complex64::new(1.0, 0.0);
    for k in (0..n).rev() {
        out[k] = prefix[k] * suffix;
        suffix *= Complex64::new(xs[k], 1.0);
    }
    out
}

/// Analytic gradient of `(re − b)/im` in the (sorted) eigenvalues.
pub fn operator_gradient(lambda: &Spectrum, b: f64) -> Result<Vec<f64>> {
    let e = operator_eval(lambda, b)?;
    Ok(gradient_from_parts(&lambda.values, e.re - b, e.im))
}

/// Gradient of `(re − b)/im` for an arbitrary ordering of eigenvalues, given
/// `shifted_re = re − b` and `im` already evaluated there.
pub(crate) fn gradient_from_parts(xs: &[f64], shifted_re: f64, im: f64) -> Vec<f64> {
    let im2 = im * im;
    leave_one_out_products(xs)
        .into_iter()
        .map(|p| (p.re * im - shifted_re * p.im) / im2)
        .collect()
}

/// Gradient of the unshifted-normalised form `re − cot θ₀ · im`, i.e.
/// `Re Π_{j≠k}(λⱼ+i) − cot θ₀ · Im Π_{j≠k}(λⱼ+i)`, for arbitrary ordering.
pub(crate) fn balance_gradient(xs: &[f64], cot_theta0: f64) -> Vec<f64> {
    leave_one_out_products(xs)
        .into_iter()
        .map(|p| p.re - cot_theta0 * p.im)
        .collect()
}

/// All `S₀ … Sₙ` by the one-variable-at-a-time recurrence.
pub fn elementary_symmetric_all(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for (m, &x) in xs.iter().enumerate() {
        for j in (1..=m + 1).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e
}

pub fn elementary_symmetric(lambda: &Spectrum, k: usize) -> Result<f64> {
    let n = lambda.len();
    if k > n {
        return Err(Error::IndexOutOfRange { k, lo: 0, hi: n });
    }
    Ok(elementary_symmetric_all(&lambda.values)[k])
}

/// Membership in `Γᵏ` together with the margin `min_{j≤k} Sⱼ`.
pub fn gamma_k_membership(lambda: &Spectrum, k: usize) -> Result<(bool, f64)> {
    gamma_k_raw(&lambda.values, k)
}

fn gamma_k_raw(xs: &[f64], k: usize) -> Result<(bool, f64)> {
    let n = xs.len();
    if k < 1 || k > n {
        return Err(Error::IndexOutOfRange { k, lo: 1, hi: n });
    }
    let s = elementary_symmetric_all(xs);
    let margin = s[1..=k].iter().copied().fold(f64::INFINITY, f64::min);
    Ok((margin > 0.0, margin))
}

/// Position of a spectrum relative to `Γ_{θ₀,Θ₀}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub in_window: bool,
    /// `θ₀ − max_j Σ_{i≠j} arccot λᵢ`.
    pub subsolution_margin: f64,
    /// `Θ(λ)`.
    pub phase: f64,
    /// `Θ₀ − Θ(λ)`.
    pub upper_margin: f64,
    /// Largest k with `λ ∈ Γᵏ` (0 when `S₁ ≤ 0`).
    pub gamma_k_max: usize,
}

impl ConeReport {
    /// Distance-like margin to the window boundary: the smaller of the two
    /// defining inequalities.
    pub fn margin(&self) -> f64 {
        self.subsolution_margin.min(self.upper_margin)
    }
}

pub fn window_membership(lambda: &Spectrum, w: &PhaseWindow) -> ConeReport {
    let arcs: Vec<f64> = lambda.values.iter().map(|&x| arccot_unchecked(x)).collect();
    let n = arcs.len();
    let phase: f64 = arcs.iter().sum();
    let mut worst = f64::NEG_INFINITY;
    let mut worst_j = 0;
    for j in 0..n {
        let s: f64 = arcs.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, a)| a).sum();
        if s > worst {
            worst = s;
            worst_j = j;
        }
    }
    // Omitting the largest eigenvalue (smallest arccot) gives the worst sum;
    // ties among equal eigenvalues may pick another index.
    debug_assert!(
        lambda.values[worst_j] == lambda.values[0] || (worst - (phase - arcs[0])).abs() <= 1e-12 * phase.abs().max(1.0)
    );
    let s = elementary_symmetric_all(&lambda.values);
    let gamma_k_max = (1..=n).take_while(|&k| s[k] > 0.0).last().unwrap_or(0);
    let subsolution_margin = w.theta0 - worst;
    let upper_margin = w.big_theta0 - phase;
    ConeReport {
        in_window: subsolution_margin > 0.0 && upper_margin > 0.0,
        subsolution_margin,
        phase,
        upper_margin,
        gamma_k_max,
    }
}

/// Which clause of the positivity statement for `Θ ≤ π` failed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WangYuanClause {
    /// `S_j < 0` for some `j ≤ n − 1`.
    ClosedCone { j: usize, value: f64 },
    /// `λ_{n−1} ≤ 0`.
    SecondSmallest { value: f64 },
    /// `λ₁ + (n − 1)λₙ < 0`.
    ExtremeSum { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WangYuanOutcome {
    Pass,
    Fail(WangYuanClause),
    /// `Θ > π` or `n < 2`.
    NotApplicable,
}

/// Checks `λ ∈ Γ̄ⁿ⁻¹`, `λ_{n−1} > 0` and `λ₁ + (n−1)λₙ ≥ 0` for spectra with
/// `Θ(λ) ≤ π`. The non-strict clauses allow round-off relative to the size of
/// the terms involved.
pub fn wang_yuan_audit(lambda: &Spectrum) -> WangYuanOutcome {
    let n = lambda.len();
    if n < 2 || lagrangian_phase(lambda) > PI {
        return WangYuanOutcome::NotApplicable;
    }
    let xs = &lambda.values;
    let s = elementary_symmetric_all(xs);
    let abs: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
    let s_abs = elementary_symmetric_all(&abs);
    for j in 1..n {
        if s[j] < -1e-12 * s_abs[j] {
            return WangYuanOutcome::Fail(WangYuanClause::ClosedCone { j, value: s[j] });
        }
    }
    if xs[n - 2] <= 0.0 {
        return WangYuanOutcome::Fail(WangYuanClause::SecondSmallest { value: xs[n - 2] });
    }
    let m = (n - 1) as f64;
    let extreme = xs[0] + m * xs[n - 1];
    if extreme < -1e-12 * (xs[0].abs() + m * xs[n - 1].abs()) {
        return WangYuanOutcome::Fail(WangYuanClause::ExtremeSum { value: extreme });
    }
    WangYuanOutcome::Pass
}

/// Both sides of the two-dimensional rewriting as a Monge–Ampère type
/// equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dim2Residual {
    /// `(λ₁ − c)(λ₂ − c) − csc²θ₀`.
    pub reformulated: f64,
    /// `(λ₁λ₂ − 1) − c(λ₁ + λ₂)`.
    pub original: f64,
    /// `|reformulated| − |original|`.
    pub discrepancy: f64,
}

pub fn dim2_reformulation_residual(lambda: &Spectrum, theta0: f64) -> Result<Dim2Residual> {
    if lambda.len() != 2 {
        return Err(Error::InvalidSpectrum(format!("expected n = 2, got {}", lambda.len())));
    }
    let (l1, l2) = (lambda.values[0], lambda.values[1]);
    let c = cot(theta0);
    let csc2 = 1.0 / theta0.sin().powi(2);
    let reformulated = (l1 - c) * (l2 - c) - csc2;
    let original = (l1 * l2 - 1.0) - c * (l1 + l2);
    Ok(Dim2Residual {
        reformulated,
        original,
        discrepancy: reformulated.abs() - original.abs(),
    })
}

/// Both sides of the three-dimensional rewriting in shifted eigenvalues
/// `μ = λ − cot θ₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dim3Residual {
    /// `S₃(μ) − (c² + 1)S₁(μ) − 2c(c² + 1) − rhs`.
    pub shifted: f64,
    /// `(S₃ − S₁) − c(S₂ − 1) − rhs`.
    pub original: f64,
    /// `|shifted| − |original|`.
    pub discrepancy: f64,
}

pub fn dim3_reformulation_residual(lambda: &Spectrum, theta0: f64, rhs: f64) -> Result<Dim3Residual> {
    if lambda.len() != 3 {
        return Err(Error::InvalidSpectrum(format!("expected n = 3, got {}", lambda.len())));
    }
    let c = cot(theta0);
    let mu: Vec<f64> = lambda.values.iter().map(|&x| x - c).collect();
    let sm = elementary_symmetric_all(&mu);
    let s = elementary_symmetric_all(&lambda.values);
    let c2p1 = c * c + 1.0;
    let shifted = sm[3] - c2p1 * sm[1] - 2.0 * c * c2p1 - rhs;
    let original = (s[3] - s[1]) - c * (s[2] - 1.0) - rhs;
    Ok(Dim3Residual {
        shifted,
        original,
        discrepancy: shifted.abs() - original.abs(),
    })
}

/// Step used for the finite-difference Hessian.
pub const HESSIAN_STEP: f64 = 1e-4;
/// Allowed positive part of the largest Hessian eigenvalue.
pub const HESSIAN_TOLERANCE: f64 = 1e-7;

/// Numerical certificate of the structural properties of the shifted operator
/// at one spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChenAudit {
    pub n: usize,
    pub b: f64,
    /// `Im Π(λᵢ + i)`.
    pub im: f64,
    pub im_positive: bool,
    pub gradient: Vec<f64>,
    pub gradient_positive: bool,
    /// Worst relative mismatch between the analytic gradient and central
    /// differences (step 1e-6).
    pub gradient_fd_rel_error: f64,
    /// Largest `C` for which the derivative bound on `1/im` holds here.
    pub derivative_bound_c: f64,
    /// Largest eigenvalue of the symmetric finite-difference Hessian.
    pub hessian_max_eigenvalue: f64,
    /// Largest `ε₂` with `H ≤ −ε₂ (P²/im³) diag(1/(1+λᵢ²))`. Negative when the
    /// Hessian is not negative definite.
    pub hessian_weighted_margin: f64,
    /// For `n ≤ 3` and `b ≥ 0`: Hessian max eigenvalue within tolerance.
    /// Otherwise: weighted margin positive.
    pub hessian_ok: bool,
    /// Midpoint of the segment to a partner spectrum lies in the closed window.
    pub midpoint_in_closure: Option<bool>,
}

/// Audit of the shifted operator. Audit failures are returned as data.
pub fn chen_lemma_audit(lambda: &Spectrum, b: f64, w: &PhaseWindow, partner: Option<&Spectrum>) -> Result<ChenAudit> {
    let xs = lambda.values();
    let n = xs.len();
    let e = operator_eval(lambda, b)?;
    let gradient = gradient_from_parts(xs, e.re - b, e.im);
    let gradient_positive = gradient.iter().all(|&g| g > 0.0);

    let fd_step = 1e-6;
    let mut gradient_fd_rel_error: f64 = 0.0;
    for k in 0..n {
        let plus = shifted_value(xs, k, fd_step, b)?;
        let minus = shifted_value(xs, k, -fd_step, b)?;
        let fd = (plus - minus) / (2.0 * fd_step);
        let rel = (fd - gradient[k]).abs() / gradient[k].abs().max(1e-300);
        gradient_fd_rel_error = gradient_fd_rel_error.max(rel);
    }

    let modulus_sq: f64 = xs.iter().map(|&x| 1.0 + x * x).product();
    let mut derivative_bound_c = f64::INFINITY;
    let loo = leave_one_out_products(xs);
    for k in 0..n {
        let d_inv_im = (loo[k].im / (e.im * e.im)).abs();
        if d_inv_im > 0.0 {
            let shape = (modulus_sq / e.im.powi(3)).sqrt() / (1.0 + xs[k] * xs[k]).sqrt();
            derivative_bound_c = derivative_bound_c.min((shape / d_inv_im).powi(2));
        }
    }

    let h = fd_hessian(xs, b)?;
    let hessian_max_eigenvalue = max_symmetric_eigenvalue(&h);
    let weight = modulus_sq / e.im.powi(3);
    let scaled = DMatrix::from_fn(n, n, |i, j| {
        let di = (weight / (1.0 + xs[i] * xs[i])).sqrt();
        let dj = (weight / (1.0 + xs[j] * xs[j])).sqrt();
        h[(i, j)] / (di * dj)
    });
    let hessian_weighted_margin = -max_symmetric_eigenvalue(&scaled);
    let hessian_ok = if n <= 3 && b >= 0.0 {
        hessian_max_eigenvalue <= HESSIAN_TOLERANCE
    } else {
        hessian_weighted_margin > 0.0
    };

    let midpoint_in_closure = partner.map(|p| {
        let mid: Vec<f64> = xs.iter().zip(p.values()).map(|(a, c)| 0.5 * (a + c)).collect();
        let mid = Spectrum::new(mid).expect("midpoint of finite spectra is finite");
        let r = window_membership(&mid, w);
        r.subsolution_margin >= -1e-12 && r.upper_margin >= -1e-12
    });

    Ok(ChenAudit {
        n,
        b,
        im: e.im,
        im_positive: e.im > 0.0,
        gradient,
        gradient_positive,
        gradient_fd_rel_error,
        derivative_bound_c,
        hessian_max_eigenvalue,
        hessian_weighted_margin,
        hessian_ok,
        midpoint_in_closure,
    })
}

fn shifted_value(xs: &[f64], k: usize, step: f64, b: f64) -> Result<f64> {
    let mut ys = xs.to_vec();
    ys[k] += step;
    let p = product_of(ys.iter().copied())?;
    if p.im <= 0.0 {
        return Err(Error::PhaseOutOfRange { phase: p.arg() });
    }
    Ok((p.re - b) / p.im)
}

/// Central differences of the analytic gradient, symmetrized.
fn fd_hessian(xs: &[f64], b: f64) -> Result<DMatrix<f64>> {
    let n = xs.len();
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut plus = xs.to_vec();
        let mut minus = xs.to_vec();
        plus[j] += HESSIAN_STEP;
        minus[j] -= HESSIAN_STEP;
        let gp = gradient_at(&plus, b)?;
        let gm = gradient_at(&minus, b)?;
        for i in 0..n {
            h[(i, j)] = (gp[i] - gm[i]) / (2.0 * HESSIAN_STEP);
        }
    }
    Ok(0.5 * (&h + h.transpose()))
}

fn gradient_at(xs: &[f64], b: f64) -> Result<Vec<f64>> {
    let p = product_of(xs.iter().copied())?;
    if p.im <= 0.0 {
        return Err(Error::PhaseOutOfRange { phase: p.arg() });
    }
    Ok(gradient_from_parts(xs, p.re - b, p.im))
}

fn max_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `S_{k+1}/S_k` at the midpoint minus the average at the endpoints. Inputs
/// are taken in the given order (no sorting), so the segment is the literal
/// one between the two vectors.
pub fn sk_ratio_concavity_probe(a: &[f64], b: &[f64], k: usize) -> Result<f64> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::InvalidSpectrum("endpoints differ in length".into()));
    }
    if k < 1 || k + 1 > n {
        return Err(Error::IndexOutOfRange {
            k,
            lo: 1,
            hi: n.saturating_sub(1),
        });
    }
    for xs in [a, b] {
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpectrum("non-finite entry".into()));
        }
        if !gamma_k_raw(xs, k)?.0 {
            return Err(Error::ConeViolation { k });
        }
    }
    let ratio = |xs: &[f64]| {
        let s = elementary_symmetric_all(xs);
        s[k + 1] / s[k]
    };
    let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
    Ok(ratio(&mid) - 0.5 * (ratio(a) + ratio(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn sp(v: &[f64]) -> Spectrum {
        Spectrum::from_slice(v).unwrap()
    }

    #[test]
    fn arccot_reference_points() {
        assert_eq!(arccot(0.0).unwrap(), FRAC_PI_2);
        assert!((arccot(1.0).unwrap() - FRAC_PI_4).abs() < 1e-15);
        assert!((arccot(-1.0).unwrap() - 3.0 * FRAC_PI_4).abs() < 1e-15);
        assert!(arccot(f64::NAN).is_err());
        assert!(arccot(f64::INFINITY).is_err());
    }

    #[test]
    fn spectrum_sorts_and_validates() {
        assert_eq!(sp(&[1.0, 3.0, 2.0]).values(), &[3.0, 2.0, 1.0]);
        assert!(Spectrum::new(vec![]).is_err());
        assert!(Spectrum::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn phase_examples() {
        let t = 1e-14;
        assert!((lagrangian_phase(&sp(&[0.0, 0.0, 0.0])) - 1.5 * PI).abs() < t);
        assert!((lagrangian_phase(&sp(&[1.0, 1.0, 1.0])) - 0.75 * PI).abs() < t);
        assert!((lagrangian_phase(&sp(&[1.0, 0.0, -1.0])) - 1.5 * PI).abs() < t);
    }

    #[test]
    fn product_examples() {
        assert_eq!(sigma_product(&sp(&[2.0, 3.0])).unwrap(), (5.0, 5.0));
        assert_eq!(sigma_product(&sp(&[1.0, 1.0, 1.0])).unwrap(), (-2.0, 2.0));
        assert_eq!(sigma_product(&sp(&[7.0])).unwrap(), (7.0, 1.0));
        assert!(matches!(
            sigma_product(&sp(&[1e80, 1e80])),
            Err(Error::Magnitude { .. })
        ));
    }

    #[test]
    fn operator_value_examples() {
        assert!((operator_value(&sp(&[1.0, 1.0, 1.0]), 0.0).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(operator_value(&sp(&[2.0, 3.0]), 5.0).unwrap(), 0.0);
        // Exact symmetric-polynomial arithmetic: re = S3 - S1, im = S2 - 1.
        let s = [2.0, 2.0, 2.0];
        let e = elementary_symmetric_all(&s);
        let expected = (e[3] - e[1]) / (e[2] - 1.0);
        assert!((expected - 2.0 / 11.0).abs() < 1e-16);
        assert!((operator_value(&sp(&s), 0.0).unwrap() - expected).abs() < 1e-15);
        assert!(matches!(
            operator_value(&sp(&[0.0, 0.0, 0.0]), 0.0),
            Err(Error::PhaseOutOfRange { .. })
        ));
    }

    #[test]
    fn near_boundary_is_flagged() {
        // Θ just below π: evaluation allowed but flagged.
        let e = operator_eval(&sp(&[1e7, -1e7 + 1e-3]), 0.0).unwrap();
        assert!(e.im > 0.0 && e.near_boundary);
        let e = operator_eval(&sp(&[1.0, 1.0]), 0.0).unwrap();
        assert!(!e.near_boundary);
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(operator_gradient(&sp(&[5.0]), 0.0).unwrap(), vec![1.0]);
        // Quotient rule on (λ₁λ₂ − 1)/(λ₁ + λ₂) at (1, 1).
        let (l1, l2): (f64, f64) = (1.0, 1.0);
        let d1 = (l2 * (l1 + l2) - (l1 * l2 - 1.0)) / (l1 + l2).powi(2);
        let g = operator_gradient(&sp(&[l1, l2]), 0.0).unwrap();
        assert!((g[0] - d1).abs() < 1e-15 && (g[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x = [2.0, 2.0, 2.0];
        let g = operator_gradient(&sp(&x), 0.0).unwrap();
        let h = 1e-6;
        for k in 0..3 {
            let mut p = x;
            let mut m = x;
            p[k] += h;
            m[k] -= h;
            // Evaluate with the perturbed coordinate kept at index k.
            let f = |v: &[f64]| {
                let pr = product_of(v.iter().copied()).unwrap();
                pr.re / pr.im
            };
            let fd = (f(&p) - f(&m)) / (2.0 * h);
            assert!(g[k] > 0.0);
            assert!((fd - g[k]).abs() / g[k] < 1e-5);
        }
    }

    #[test]
    fn symmetric_examples() {
        let s = sp(&[1.0, 2.0, 3.0]);
        assert_eq!(elementary_symmetric(&s, 2).unwrap(), 11.0);
        assert_eq!(elementary_symmetric(&s, 3).unwrap(), 6.0);
        assert_eq!(elementary_symmetric(&s, 0).unwrap(), 1.0);
        assert_eq!(elementary_symmetric(&sp(&[-1.0, 0.0, 1.0]), 1).unwrap(), 0.0);
        assert!(elementary_symmetric(&s, 4).is_err());
    }

    #[test]
    fn gamma_k_examples() {
        let s = sp(&[2.0, 1.0, -0.5]);
        let (inside, margin) = gamma_k_membership(&s, 2).unwrap();
        assert!(inside);
        assert!((margin - 0.5).abs() < 1e-15);
        let (inside, margin) = gamma_k_membership(&s, 3).unwrap();
        assert!(!inside);
        assert_eq!(margin, -1.0);
        assert!(!gamma_k_membership(&sp(&[3.0, 1.0, -1.0]), 2).unwrap().0);
        assert!(gamma_k_membership(&s, 0).is_err());
        assert!(gamma_k_membership(&s, 4).is_err());
    }

    #[test]
    fn window_examples() {
        let r = window_membership(&sp(&[1.0, 1.0, 1.0]), &PhaseWindow::new(2.0, 2.5).unwrap());
        assert!(r.in_window);
        assert!((r.subsolution_margin - (2.0 - FRAC_PI_2)).abs() < 1e-15);
        assert!((r.subsolution_margin - 0.4292).abs() < 1e-4);
        assert!((r.phase - 0.75 * PI).abs() < 1e-15);
        assert_eq!(r.gamma_k_max, 3);

        let w = PhaseWindow::new(FRAC_PI_2, 3.0).unwrap();
        let r = window_membership(&sp(&[1.0, 1.0, 1.0]), &w);
        assert!(r.subsolution_margin.abs() < 1e-15);
        assert!(!r.in_window || r.subsolution_margin > 0.0);

        let r = window_membership(&sp(&[1.0, 1.0, 0.5]), &w);
        let expected = FRAC_PI_2 - (arccot(1.0).unwrap() + arccot(0.5).unwrap());
        assert!((r.subsolution_margin - expected).abs() < 1e-15);
        assert!((r.subsolution_margin + 0.321751).abs() < 1e-6);
        assert!(!r.in_window);
    }

    #[test]
    fn window_validation() {
        assert!(PhaseWindow::new(2.0, 1.0).is_err());
        assert!(PhaseWindow::new(0.0, 1.0).is_err());
        assert!(PhaseWindow::new(1.0, PI).is_err());
        let w = PhaseWindow::with_default_upper(FRAC_PI_2).unwrap();
        assert!((w.big_theta0 - 0.75 * PI).abs() < 1e-15);
    }

    #[test]
    fn wang_yuan_examples() {
        let s = sp(&[5.0, 1.0, 0.1]);
        assert!((lagrangian_phase(&s) - 2.453922).abs() < 1e-6);
        assert_eq!(wang_yuan_audit(&s), WangYuanOutcome::Pass);
        let s = sp(&[10.0, 10.0, -0.3]);
        assert!((elementary_symmetric(&s, 2).unwrap() - 94.0).abs() < 1e-12);
        assert_eq!(wang_yuan_audit(&s), WangYuanOutcome::Pass);
        assert_eq!(wang_yuan_audit(&sp(&[1.0, 1.0, 1.0])), WangYuanOutcome::Pass);
        assert_eq!(wang_yuan_audit(&sp(&[0.0, 0.0, 0.0])), WangYuanOutcome::NotApplicable);
        assert_eq!(wang_yuan_audit(&sp(&[1.0])), WangYuanOutcome::NotApplicable);
    }

    #[test]
    fn dim2_examples() {
        let r = dim2_reformulation_residual(&sp(&[2.0, 0.5]), FRAC_PI_2).unwrap();
        assert!(r.reformulated.abs() < 1e-15 && r.original.abs() < 1e-15);
        let r = dim2_reformulation_residual(&sp(&[3.0, 1.0]), FRAC_PI_2).unwrap();
        assert!((r.original - 2.0).abs() < 1e-15);
        assert!((r.reformulated - 2.0).abs() < 1e-15);
        assert!(dim2_reformulation_residual(&sp(&[1.0]), 1.0).is_err());
    }

    #[test]
    fn dim3_examples() {
        let r = dim3_reformulation_residual(&sp(&[1.0, 1.0, 1.0]), 0.75 * PI, 0.0).unwrap();
        assert!(r.shifted.abs() < 1e-14 && r.original.abs() < 1e-14);
        let r = dim3_reformulation_residual(&sp(&[2.0, 2.0, 2.0]), FRAC_PI_2, 2.0).unwrap();
        assert!(r.shifted.abs() < 1e-14 && r.original.abs() < 1e-14);
    }

    #[test]
    fn chen_examples() {
        let w = PhaseWindow::new(FRAC_PI_2, 3.0).unwrap();
        let a = chen_lemma_audit(&sp(&[1.0, 1.0, 1.0]), 0.0, &w, None).unwrap();
        assert!(a.hessian_max_eigenvalue <= 1e-7);
        // Analytic Hessian of cot Θ at λ = (1,1,1) is −J − I: max eigenvalue −1.
        assert!((a.hessian_max_eigenvalue + 1.0).abs() < 1e-6);
        assert!(a.hessian_ok && a.gradient_positive);

        let a = chen_lemma_audit(&sp(&[2.0, 2.0, 2.0]), 0.0, &w, Some(&sp(&[3.0, 2.0, 1.0]))).unwrap();
        assert_eq!(a.im, 11.0);
        assert_eq!(a.midpoint_in_closure, Some(true));
        assert!(a.derivative_bound_c > 0.0);
    }

    #[test]
    fn concavity_examples() {
        let d = sk_ratio_concavity_probe(&[3.0, 2.0, 1.0], &[1.0, 2.0, 3.0], 1).unwrap();
        assert!((d - (2.0 - 11.0 / 6.0)).abs() < 1e-15);
        assert_eq!(
            sk_ratio_concavity_probe(&[3.0, 2.0, 1.0], &[3.0, 2.0, 1.0], 2).unwrap(),
            0.0
        );
        assert!(matches!(
            sk_ratio_concavity_probe(&[-3.0, 2.0, 0.0], &[1.0, 2.0, 3.0], 1),
            Err(Error::ConeViolation { k: 1 })
        ));
        assert!(sk_ratio_concavity_probe(&[1.0, 1.0], &[1.0, 1.0], 2).is_err());
    }
}
