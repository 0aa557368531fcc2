//! Seeded randomized verification suites for the pointwise algebra, the
//! cones, the shifted operator, the low-dimensional rewritings and the
//! De Giorgi lemma.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lab::{de_giorgi_verify, default_delta_grid, fit_de_giorgi, DecaySamples};
use crate::phase::{
    self, chen_lemma_audit, dim2_reformulation_residual, dim3_reformulation_residual, elementary_symmetric_all,
    lagrangian_phase, operator_value, product_modulus, sigma_product, sk_ratio_concavity_probe, wang_yuan_audit,
    window_membership, PhaseWindow, Spectrum, WangYuanOutcome, HESSIAN_TOLERANCE,
};

/// Tolerance of the phase/product identities, relative to `Π√(1+λᵢ²)`.
pub const PHASE_IDENTITY_TOL: f64 = 1e-12;
/// Absolute tolerance of the rewriting identities.
pub const REFORMULATION_TOL: f64 = 1e-10;
/// Relative tolerance of the analytic gradient against central differences.
pub const GRADIENT_FD_TOL: f64 = 1e-5;
/// Lower bound for the concavity probes.
pub const CONCAVITY_TOL: f64 = -1e-12;
/// Range of negative shifts probed for the `n = 4` margin.
pub const NEGATIVE_SHIFT_RANGE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Algebra,
    Cones,
    Chen,
    Reformulations,
    Degiorgi,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Algebra,
        Suite::Cones,
        Suite::Chen,
        Suite::Reformulations,
        Suite::Degiorgi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Algebra => "algebra",
            Suite::Cones => "cones",
            Suite::Chen => "chen",
            Suite::Reformulations => "reformulations",
            Suite::Degiorgi => "degiorgi",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown suite {s:?}")))
    }
}

/// Outcome of one property over the samples where it applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub applicable: usize,
    pub violations: usize,
    /// Worst observed value of the checked quantity (see `name`).
    pub worst: f64,
    pub tolerance: f64,
    /// Description of the first violating sample.
    pub first_violation: Option<String>,
}

impl CheckSummary {
    fn new(name: &str, tolerance: f64, worst_init: f64) -> Self {
        Self {
            name: name.into(),
            applicable: 0,
            violations: 0,
            worst: worst_init,
            tolerance,
            first_violation: None,
        }
    }

    fn record(&mut self, ok: bool, value: f64, worse: fn(f64, f64) -> f64, describe: impl FnOnce() -> String) {
        self.applicable += 1;
        self.worst = worse(self.worst, value);
        if !ok {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(describe());
            }
        }
    }
}

/// Empirical constants of the shifted operator for `n = 4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChenMargins {
    /// Smallest weighted Hessian margin over the `b ≥ 0` samples.
    pub epsilon2: f64,
    /// Largest `ε` such that every probe with `b ∈ [−ε, 0)` kept positive
    /// `Im`, positive gradient and a positive weighted margin; equals the
    /// probed range when nothing failed.
    pub epsilon1: f64,
    pub negative_samples: usize,
    pub negative_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<CheckSummary>,
    pub chen_margins: Option<ChenMargins>,
    /// Wall-clock time; not part of any deterministic output.
    pub runtime_secs: f64,
}

impl SuiteReport {
    pub fn violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn check(&self, name: &str) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn rng_for(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn max_f(a: f64, b: f64) -> f64 {
    a.max(b)
}

fn min_f(a: f64, b: f64) -> f64 {
    a.min(b)
}

/// Runs `suite` with `samples` draws per property family.
pub fn run_suite(suite: Suite, samples: usize, seed: u64) -> Result<SuiteReport> {
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be positive".into()));
    }
    let start = Instant::now();
    let (checks, chen_margins) = match suite {
        Suite::Algebra => (algebra(samples, seed)?, None),
        Suite::Cones => (cones(samples, seed)?, None),
        Suite::Chen => {
            let (c, m) = chen(samples, seed)?;
            (c, Some(m))
        }
        Suite::Reformulations => (reformulations(samples, seed)?, None),
        Suite::Degiorgi => (degiorgi(samples, seed)?, None),
    };
    Ok(SuiteReport {
        suite,
        seed,
        samples,
        checks,
        chen_margins,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

/// Mixture of a uniform box and `cot α` with `α` uniform, so both moderate
/// and large eigenvalues occur.
fn random_spectrum(rng: &mut ChaCha8Rng, n: usize) -> Spectrum {
    let v: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.5) {
                rng.gen_range(-10.0..10.0)
            } else {
                phase::cot(rng.gen_range(0.01..PI - 0.01))
            }
        })
        .collect();
    Spectrum::new(v).expect("finite samples")
}

fn fmt_spec(l: &Spectrum) -> String {
    format!("{:?}", l.values())
}

fn algebra(samples: usize, seed: u64) -> Result<Vec<CheckSummary>> {
    let mut rng = rng_for(seed, 1);
    let mut re_id = CheckSummary::new("re_equals_cos_phase_times_modulus", PHASE_IDENTITY_TOL, 0.0);
    let mut im_id = CheckSummary::new("im_equals_sin_phase_times_modulus", PHASE_IDENTITY_TOL, 0.0);
    let mut sym = CheckSummary::new("product_matches_symmetric_expansion", PHASE_IDENTITY_TOL, 0.0);
    let mut cot_id = CheckSummary::new("unshifted_operator_equals_cot_phase", 1e-10, 0.0);
    for i in 0..samples {
        let n = 2 + i % 4;
        let l = random_spectrum(&mut rng, n);
        let (re, im) = sigma_product(&l)?;
        let p = product_modulus(&l);
        let theta = lagrangian_phase(&l);
        let dre = (re - theta.cos() * p).abs() / p;
        let dim = (im - theta.sin() * p).abs() / p;
        re_id.record(dre <= PHASE_IDENTITY_TOL, dre, max_f, || fmt_spec(&l));
        im_id.record(dim <= PHASE_IDENTITY_TOL, dim, max_f, || fmt_spec(&l));

        // Re = S_n − S_{n−2} + …, Im = S_{n−1} − S_{n−3} + …
        let s = elementary_symmetric_all(l.values());
        let abs: Vec<f64> = l.values().iter().map(|x| x.abs()).collect();
        let scale: f64 = elementary_symmetric_all(&abs).iter().sum();
        let (mut er, mut ei) = (0.0, 0.0);
        for k in 0..=n {
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if k % 2 == 0 {
                er += sign * s[n - k];
            } else {
                ei += sign * s[n - k];
            }
        }
        let d = ((er - re).abs()).max((ei - im).abs()) / scale;
        sym.record(d <= PHASE_IDENTITY_TOL, d, max_f, || fmt_spec(&l));

        if theta > 0.0 && theta < PI && im > 0.0 {
            let g = operator_value(&l, 0.0)?;
            let c = phase::cot(theta);
            let d = (g - c).abs() / (1.0 + c * c);
            cot_id.record(d <= 1e-10, d, max_f, || fmt_spec(&l));
        }
    }
    Ok(vec![re_id, im_id, sym, cot_id])
}

fn cones(samples: usize, seed: u64) -> Result<Vec<CheckSummary>> {
    let mut rng = rng_for(seed, 2);
    let mut wy = CheckSummary::new("wang_yuan_clauses_for_phase_at_most_pi", 0.0, 0.0);
    let mut win = CheckSummary::new("window_report_consistency", 1e-12, 0.0);
    let mut conc = CheckSummary::new("sk_ratio_midpoint_concavity", CONCAVITY_TOL, f64::INFINITY);
    for i in 0..samples {
        let n = 2 + i % 4;
        // Phases scaled so that Θ ≤ π; every draw is applicable.
        let arcs: Vec<f64> = (0..n).map(|_| rng.gen_range(1e-3..1.0)).collect();
        let total: f64 = arcs.iter().sum();
        let target = PI * rng.gen_range(0.05..=1.0);
        let l = Spectrum::new(arcs.iter().map(|a| phase::cot(a * target / total)).collect()).expect("finite");
        let out = wang_yuan_audit(&l);
        if out != WangYuanOutcome::NotApplicable {
            let bad = matches!(out, WangYuanOutcome::Fail(_));
            wy.record(!bad, if bad { 1.0 } else { 0.0 }, max_f, || {
                format!("{} {out:?}", fmt_spec(&l))
            });
        }

        let l = random_spectrum(&mut rng, n);
        let theta0 = rng.gen_range(0.05..PI - 0.1);
        let w = PhaseWindow::new(theta0, rng.gen_range(theta0..PI).max(theta0 + 1e-3).min(PI - 1e-9))?;
        let r = window_membership(&l, &w);
        let arcs: Vec<f64> = l.values().iter().map(|&x| phase::arccot(x)).collect::<Result<_>>()?;
        let brute = (0..n)
            .map(|j| {
                arcs.iter()
                    .enumerate()
                    .filter(|&(i, _)| i != j)
                    .map(|(_, a)| a)
                    .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let d = (r.subsolution_margin - (theta0 - brute)).abs();
        let s = elementary_symmetric_all(l.values());
        let gk = (1..=n).take_while(|&k| s[k] > 0.0).last().unwrap_or(0);
        let ok = d <= 1e-12 * (1.0 + brute)
            && r.in_window == (r.subsolution_margin > 0.0 && r.phase < w.big_theta0)
            && r.gamma_k_max == gk;
        win.record(ok, d, max_f, || format!("{} {w:?}", fmt_spec(&l)));
    }
    for i in 0..samples {
        let n = 3 + (i / 2) % 2;
        let k = 1 + i % 2;
        let a = gamma_k_sample(&mut rng, n, k);
        let b = gamma_k_sample(&mut rng, n, k);
        let v = sk_ratio_concavity_probe(&a, &b, k)?;
        conc.record(v >= CONCAVITY_TOL, v, min_f, || format!("k={k} a={a:?} b={b:?}"));
    }
    Ok(vec![wy, win, conc])
}

/// Rejection sample from the box `[−5, 5]ⁿ` restricted to `Γᵏ`.
fn gamma_k_sample(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let s = elementary_symmetric_all(&v);
        if (1..=k).all(|j| s[j] > 0.0) {
            return v;
        }
    }
}

/// Smallest arccot used for window samples; keeps `λ ≤ cot 0.05 ≈ 20`.
const MIN_ARC: f64 = 0.05;

fn random_window(rng: &mut ChaCha8Rng) -> PhaseWindow {
    let theta0 = rng.gen_range(0.3..PI - 0.3);
    let big = theta0 + (PI - theta0) * rng.gen_range(0.2..0.95);
    PhaseWindow::new(theta0, big).expect("valid window")
}

/// A spectrum strictly inside `w`: arccot values drawn uniformly and scaled
/// so the largest `(n−1)`-fold sum is a random fraction of `θ₀`.
fn spectrum_in_window(rng: &mut ChaCha8Rng, n: usize, w: &PhaseWindow) -> Spectrum {
    loop {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut sorted = raw.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let top: f64 = sorted[..n - 1].iter().sum();
        let scale = w.theta0 * rng.gen_range(0.05..0.999) / top;
        let arcs: Vec<f64> = raw.iter().map(|r| r * scale).collect();
        if arcs.iter().any(|&a| a < MIN_ARC) {
            continue;
        }
        let l = Spectrum::new(arcs.iter().map(|&a| phase::cot(a)).collect()).expect("finite");
        if window_membership(&l, w).in_window {
            return l;
        }
    }
}

fn chen(samples: usize, seed: u64) -> Result<(Vec<CheckSummary>, ChenMargins)> {
    let mut rng = rng_for(seed, 3);
    let mut im_pos = CheckSummary::new("im_positive", 0.0, f64::INFINITY);
    let mut grad_pos = CheckSummary::new("gradient_positive", 0.0, f64::INFINITY);
    let mut grad_fd = CheckSummary::new("gradient_matches_central_differences", GRADIENT_FD_TOL, 0.0);
    let mut hess = CheckSummary::new("hessian_max_eigenvalue", HESSIAN_TOLERANCE, f64::NEG_INFINITY);
    let mut hess_ok = CheckSummary::new("hessian_structure", 0.0, f64::INFINITY);
    let mut convex = CheckSummary::new("closed_window_midpoint_convexity", 0.0, 0.0);
    let mut deriv = CheckSummary::new("inverse_im_derivative_constant_positive", 0.0, f64::INFINITY);
    let mut epsilon2 = f64::INFINITY;
    for i in 0..samples {
        let n = 3 + i % 2;
        let w = random_window(&mut rng);
        let l = spectrum_in_window(&mut rng, n, &w);
        let partner = spectrum_in_window(&mut rng, n, &w);
        let (re, _) = sigma_product(&l)?;
        let b = re.abs().max(1.0) * rng.gen_range(0.0..2.0);
        let a = chen_lemma_audit(&l, b, &w, Some(&partner))?;
        let desc = || format!("{} b={b} {w:?}", fmt_spec(&l));
        im_pos.record(a.im_positive, a.im, min_f, desc);
        let gmin = a.gradient.iter().copied().fold(f64::INFINITY, f64::min);
        grad_pos.record(a.gradient_positive, gmin, min_f, desc);
        grad_fd.record(
            a.gradient_fd_rel_error <= GRADIENT_FD_TOL,
            a.gradient_fd_rel_error,
            max_f,
            desc,
        );
        hess.record(
            a.hessian_max_eigenvalue <= HESSIAN_TOLERANCE,
            a.hessian_max_eigenvalue,
            max_f,
            desc,
        );
        hess_ok.record(a.hessian_ok, a.hessian_weighted_margin, min_f, desc);
        let mid = a.midpoint_in_closure.unwrap_or(false);
        convex.record(mid, if mid { 0.0 } else { 1.0 }, max_f, desc);
        let c_ok = a.derivative_bound_c > 0.0;
        deriv.record(c_ok, a.derivative_bound_c, min_f, desc);
        if n == 4 {
            epsilon2 = epsilon2.min(a.hessian_weighted_margin);
        }
    }

    let negative_samples = samples.div_ceil(2);
    let mut failing_b: Vec<f64> = Vec::new();
    for _ in 0..negative_samples {
        let w = random_window(&mut rng);
        let l = spectrum_in_window(&mut rng, 4, &w);
        let b = -NEGATIVE_SHIFT_RANGE * rng.gen_range(f64::EPSILON..=1.0);
        let ok = match chen_lemma_audit(&l, b, &w, None) {
            Ok(a) => a.im_positive && a.gradient_positive && a.hessian_weighted_margin > 0.0,
            Err(_) => false,
        };
        if !ok {
            failing_b.push(b);
        }
    }
    let epsilon1 = failing_b.iter().map(|b| b.abs()).fold(NEGATIVE_SHIFT_RANGE, f64::min);
    let margins = ChenMargins {
        epsilon2,
        epsilon1,
        negative_samples,
        negative_failures: failing_b.len(),
    };
    Ok((vec![im_pos, grad_pos, grad_fd, hess, hess_ok, convex, deriv], margins))
}

fn reformulations(samples: usize, seed: u64) -> Result<Vec<CheckSummary>> {
    let mut rng = rng_for(seed, 4);
    let mut d2 = CheckSummary::new("dim2_rewriting_agreement", REFORMULATION_TOL, 0.0);
    let mut d3 = CheckSummary::new("dim3_rewriting_agreement", REFORMULATION_TOL, 0.0);
    for _ in 0..samples {
        let theta0 = rng.gen_range(0.2..PI - 0.2);
        let l2 = Spectrum::new((0..2).map(|_| rng.gen_range(-5.0..5.0)).collect()).expect("finite");
        let r = dim2_reformulation_residual(&l2, theta0)?;
        let d = (r.reformulated - r.original).abs();
        d2.record(d <= REFORMULATION_TOL, d, max_f, || {
            format!("{} theta0={theta0}", fmt_spec(&l2))
        });

        let l3 = Spectrum::new((0..3).map(|_| rng.gen_range(-5.0..5.0)).collect()).expect("finite");
        let rhs = rng.gen_range(0.0..10.0);
        let r = dim3_reformulation_residual(&l3, theta0, rhs)?;
        let d = (r.shifted - r.original).abs();
        d3.record(d <= REFORMULATION_TOL, d, max_f, || {
            format!("{} theta0={theta0} rhs={rhs}", fmt_spec(&l3))
        });
    }
    Ok(vec![d2, d3])
}

fn degiorgi(samples: usize, seed: u64) -> Result<Vec<CheckSummary>> {
    let mut rng = rng_for(seed, 5);
    let mut vanish = CheckSummary::new("fitted_threshold_vanishing", 0.0, 0.0);
    let mut constant = CheckSummary::new("flat_profile_fails_hypothesis", 0.0, 0.0);
    let deltas = default_delta_grid();
    let levels = 200;
    for _ in 0..samples {
        // φ(s) = A (1 − s/K)₊^m on a grid reaching past K.
        let amp = rng.gen_range(0.1..10.0);
        let k = rng.gen_range(0.5..5.0);
        let m = rng.gen_range(0.5..3.0);
        let top = 3.0 * k;
        let s: Vec<f64> = (0..=levels).map(|j| top * j as f64 / levels as f64).collect();
        let phi: Vec<f64> = s.iter().map(|&x| amp * (1.0 - x / k).max(0.0).powf(m)).collect();
        let d = DecaySamples::new(s.clone(), phi)?;
        let fit = fit_de_giorgi(&d, 0.0, &deltas)?;
        let rep = de_giorgi_verify(&d, fit.c, fit.delta, 0.0)?;
        let ok = rep.vanishing_checked && rep.vanished;
        vanish.record(ok, rep.threshold / k, max_f, || format!("A={amp} K={k} m={m}"));

        let flat = DecaySamples::new(s, vec![amp; levels + 1])?;
        // C φ^{1+δ} = K·A while s′φ reaches 3K·A.
        let c = k * amp.powf(-fit.delta);
        let failed = matches!(
            de_giorgi_verify(&flat, c, fit.delta, 0.0),
            Err(Error::HypothesisFail { .. })
        );
        constant.record(failed, 0.0, max_f, || format!("A={amp} K={k}"));
    }
    Ok(vec![vanish, constant])
}
