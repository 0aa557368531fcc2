//! Stability experiments: two solves of the approximation equation with
//! densities `f₁`, `f₂` at a fixed `t`, compared against
//! `sup(φ₂ − φ₁) ≤ 2(−min U_t + C) ‖(φ₂ − φ₁)⁺‖_{L^{q*}}^γ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::elementary_symmetric_all;
use crate::phase::PhaseWindow;
use crate::solver::{newton_solve, SolveConfig};
use crate::torus::{check_density, integrate_against, relative_spectrum, Backgrounds, PotentialField, ScalarField};

/// Relative tolerance of the closed-cone check on `λ(χ)`.
const CLOSED_CONE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityRegime {
    /// `n ≥ 4`, exponent `1/(n+2)`.
    General,
    /// `n = 3`, `θ₀ < π/2`, exponent `1/6`.
    Hypercritical,
    /// `n = 3` with `λ(χ) ∈ Γ̄²` everywhere, exponent `1/5`.
    Supercritical,
}

impl StabilityRegime {
    pub fn exponent(self, n: usize) -> f64 {
        match self {
            Self::General => 1.0 / (n as f64 + 2.0),
            Self::Hypercritical => 1.0 / 6.0,
            Self::Supercritical => 1.0 / 5.0,
        }
    }

    /// Checks the dimension, phase and background requirements.
    pub fn check(self, backgrounds: &Backgrounds, window: &PhaseWindow) -> Result<()> {
        let n = backgrounds.grid().complex_dim();
        let fail = |msg: String| Err(Error::InvalidInput(msg));
        match self {
            Self::General if n < 4 => fail(format!("general regime needs n >= 4, got {n}")),
            Self::Hypercritical if n != 3 || window.theta0 >= std::f64::consts::FRAC_PI_2 => {
                fail("hypercritical regime needs n = 3 and theta0 < pi/2".into())
            }
            Self::Supercritical if n != 3 => fail(format!("supercritical regime needs n = 3, got {n}")),
            Self::Supercritical => {
                let (ok, worst) = closed_gamma2(backgrounds)?;
                if ok {
                    Ok(())
                } else {
                    fail(format!(
                        "background eigenvalues leave the closed 2-cone (min S_j = {worst:e})"
                    ))
                }
            }
            _ => Ok(()),
        }
    }
}

/// Whether `S₁, S₂ ≥ 0` for `λ(χ)` at every point, with relative slack.
/// Also returns the smallest `S_j` seen.
pub fn closed_gamma2(backgrounds: &Backgrounds) -> Result<(bool, f64)> {
    let spec = relative_spectrum(&backgrounds.chi, &backgrounds.omega)?;
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for p in 0..spec.len() {
        let lam = spec.at(p);
        let s = elementary_symmetric_all(lam);
        let abs: Vec<f64> = lam.iter().map(|v| v.abs()).collect();
        let scale = elementary_symmetric_all(&abs);
        for j in 1..=2.min(lam.len()) {
            worst = worst.min(s[j]);
            if s[j] < -CLOSED_CONE_TOL * scale[j] {
                ok = false;
            }
        }
    }
    Ok((ok, worst))
}

/// Fixed data of one family of experiments.
#[derive(Debug, Clone)]
pub struct StabilitySetup {
    pub backgrounds: Backgrounds,
    pub t: f64,
    pub window: PhaseWindow,
    /// Integrability exponent `q > 1`; the norm uses `q* = q/(q−1)`.
    pub q: f64,
    pub regime: StabilityRegime,
    pub config: SolveConfig,
}

impl StabilitySetup {
    pub fn exponent(&self) -> f64 {
        self.regime.exponent(self.backgrounds.grid().complex_dim())
    }

    pub fn q_star(&self) -> f64 {
        self.q / (self.q - 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 1.0 && self.q.is_finite()) {
            return Err(Error::InvalidInput(format!("q must be finite and > 1, got {}", self.q)));
        }
        self.regime.check(&self.backgrounds, &self.window)
    }
}

/// Measured quantities of one pair of solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityPair {
    pub sup_diff: f64,
    pub plus_norm: f64,
}

/// Solves with `f₁` and `f₂` from zero and measures `sup(φ₂ − φ₁)` and
/// `‖(φ₂ − φ₁)⁺‖_{L^{q*}(ωⁿ)}` for the sup-normalized solutions.
pub fn stability_pair(setup: &StabilitySetup, f1: &ScalarField, f2: &ScalarField) -> Result<StabilityPair> {
    setup.validate()?;
    let b = &setup.backgrounds;
    check_density(f1, &b.omega)?;
    check_density(f2, &b.omega)?;
    let zero = PotentialField::zeros(b.grid());
    let s1 = newton_solve(b, &zero, setup.t, f1, setup.window, &setup.config)?;
    let s2 = newton_solve(b, &zero, setup.t, f2, setup.window, &setup.config)?;
    let diff = s2.phi.zip_map(&s1.phi, |a, c| a - c)?;
    let qs = setup.q_star();
    let plus = diff.map(|v| v.max(0.0).powf(qs));
    Ok(StabilityPair {
        sup_diff: diff.max(),
        plus_norm: integrate_against(&plus, &b.omega)?.powf(1.0 / qs),
    })
}

/// The smallest `C` for which one pair satisfies the bound.
pub fn required_constant(pair: &StabilityPair, exponent: f64, u_min: f64) -> f64 {
    if pair.plus_norm == 0.0 {
        return f64::NEG_INFINITY;
    }
    pair.sup_diff / (2.0 * pair.plus_norm.powf(exponent)) + u_min
}

/// Largest required constant over a calibration set, floored at zero.
pub fn calibrate_constant(pairs: &[StabilityPair], exponent: f64, u_min: f64) -> f64 {
    pairs
        .iter()
        .map(|p| required_constant(p, exponent, u_min))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub sup_diff: f64,
    pub plus_norm: f64,
    pub exponent: f64,
    /// Calibrated constant `C`.
    pub c: f64,
    /// `min U_t` of the envelope estimate.
    pub u_min: f64,
    /// `2(−min U_t + C) plus_norm^γ`.
    pub bound_rhs: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// Evaluates the bound for one pair. A zero plus-norm passes outright.
pub fn stability_report(pair: &StabilityPair, exponent: f64, c: f64, u_min: f64) -> StabilityReport {
    let short_circuit = pair.plus_norm == 0.0;
    let bound_rhs = if short_circuit {
        0.0
    } else {
        2.0 * (-u_min + c) * pair.plus_norm.powf(exponent)
    };
    let ratio = if short_circuit || pair.sup_diff <= 0.0 {
        0.0
    } else if bound_rhs > 0.0 {
        pair.sup_diff / bound_rhs
    } else {
        f64::INFINITY
    };
    StabilityReport {
        sup_diff: pair.sup_diff,
        plus_norm: pair.plus_norm,
        exponent,
        c,
        u_min,
        bound_rhs,
        ratio,
        pass: ratio <= 1.0,
    }
}

/// One experiment with a frozen constant.
pub fn stability_experiment(
    setup: &StabilitySetup,
    f1: &ScalarField,
    f2: &ScalarField,
    c: f64,
    u_min: f64,
) -> Result<StabilityReport> {
    let pair = stability_pair(setup, f1, f2)?;
    Ok(stability_report(&pair, setup.exponent(), c, u_min))
}

/// `f·(1 + a·shape)` renormalized to unit `ωⁿ`-mean.
pub fn perturbed_density(
    f: &ScalarField,
    backgrounds: &Backgrounds,
    amplitude: f64,
    shape: impl Fn(&[f64]) -> f64 + Sync,
) -> Result<ScalarField> {
    let s = ScalarField::from_fn(f.grid(), shape)?;
    let g = f.zip_map(&s, |v, w| v * (1.0 + amplitude * w))?;
    if g.min() <= 0.0 {
        return Err(Error::InvalidInput("perturbed density is not positive".into()));
    }
    crate::torus::normalize_density(&g, &backgrounds.omega)
}

/// Least-squares slope of `ln y` against `ln x` over the positive pairs.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySweep {
    pub regime: StabilityRegime,
    pub exponent: f64,
    pub c: f64,
    pub u_min: f64,
    pub calibration: Vec<StabilityPair>,
    pub amplitudes: Vec<f64>,
    pub reports: Vec<StabilityReport>,
    /// Slope of `ln sup_diff` against `ln plus_norm` over the sweep.
    pub slope: Option<f64>,
}

impl StabilitySweep {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

/// Calibrates `C` on `calibration` densities (each paired with `f1`), freezes
/// it, then evaluates the sweep densities.
pub fn stability_sweep(
    setup: &StabilitySetup,
    f1: &ScalarField,
    u_min: f64,
    calibration: &[ScalarField],
    sweep: &[(f64, ScalarField)],
) -> Result<StabilitySweep> {
    setup.validate()?;
    let exponent = setup.exponent();
    let cal = calibration
        .iter()
        .map(|f2| stability_pair(setup, f1, f2))
        .collect::<Result<Vec<_>>>()?;
    let c = calibrate_constant(&cal, exponent, u_min);
    let pairs = sweep
        .iter()
        .map(|(_, f2)| stability_pair(setup, f1, f2))
        .collect::<Result<Vec<_>>>()?;
    let reports: Vec<StabilityReport> = pairs.iter().map(|p| stability_report(p, exponent, c, u_min)).collect();
    let slope = log_log_slope(
        &reports.iter().map(|r| r.plus_norm).collect::<Vec<_>>(),
        &reports.iter().map(|r| r.sup_diff).collect::<Vec<_>>(),
    );
    Ok(StabilitySweep {
        regime: setup.regime,
        exponent,
        c,
        u_min,
        calibration: cal,
        amplitudes: sweep.iter().map(|s| s.0).collect(),
        reports,
        slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::TorusGrid;
    use std::f64::consts::PI;

    fn hyper_setup(res: usize) -> StabilitySetup {
        let g = TorusGrid::reduced(3, &[0], res).unwrap();
        StabilitySetup {
            backgrounds: Backgrounds::scaled_identities(&g, 2.0, 1.0),
            t: 0.5,
            window: PhaseWindow::with_default_upper(PI / 3.0).unwrap(),
            q: 2.0,
            regime: StabilityRegime::Hypercritical,
            config: SolveConfig::default(),
        }
    }

    #[test]
    fn exponents() {
        assert_eq!(StabilityRegime::General.exponent(4), 1.0 / 6.0);
        assert_eq!(StabilityRegime::General.exponent(5), 1.0 / 7.0);
        assert_eq!(StabilityRegime::Hypercritical.exponent(3), 1.0 / 6.0);
        assert_eq!(StabilityRegime::Supercritical.exponent(3), 0.2);
    }

    #[test]
    fn identical_densities_short_circuit() {
        let s = hyper_setup(8);
        let f = ScalarField::constant(s.backgrounds.grid(), 1.0);
        let r = stability_experiment(&s, &f, &f, 0.0, 0.0).unwrap();
        assert!(r.sup_diff <= 1e-10 && r.plus_norm == 0.0 && r.pass);
    }

    #[test]
    fn cosine_perturbation_within_calibrated_bound() {
        let s = hyper_setup(16);
        let b = &s.backgrounds;
        // A constant f₁ gives φ₁ ≡ 0 and hence φ₂ ≤ φ₁ after normalization.
        let f1 = ScalarField::from_fn(b.grid(), |x| 1.0 + 0.3 * x[0].sin()).unwrap();
        let cal = [0.15, 0.2]
            .iter()
            .map(|&a| perturbed_density(&f1, b, a, |x| (x[0] + 0.7).cos()))
            .collect::<Result<Vec<_>>>()
            .unwrap();
        let sweep = [0.01, 0.05, 0.1]
            .iter()
            .map(|&a| Ok((a, perturbed_density(&f1, b, a, |x| x[0].cos())?)))
            .collect::<Result<Vec<_>>>()
            .unwrap();
        let out = stability_sweep(&s, &f1, 0.0, &cal, &sweep).unwrap();
        assert!(out.c > 0.0, "{:?}", out);
        assert!(out.all_pass(), "{:?}", out.reports);
        assert!(out.slope.unwrap() >= out.exponent - 0.05);
    }

    #[test]
    fn regime_requirements() {
        let s = hyper_setup(8);
        let w = PhaseWindow::with_default_upper(PI / 2.0).unwrap();
        assert!(StabilityRegime::Hypercritical.check(&s.backgrounds, &w).is_err());
        assert!(StabilityRegime::General.check(&s.backgrounds, &s.window).is_err());
        assert!(StabilityRegime::Supercritical.check(&s.backgrounds, &w).is_ok());
        let g = s.backgrounds.grid().clone();
        let bad = Backgrounds::new(
            crate::torus::HermitianField::scaled_identity(&g, 1.0),
            crate::torus::HermitianField::diagonal(&g, &[1.0, -0.9, -0.9]).unwrap(),
            crate::torus::HermitianField::scaled_identity(&g, 1.0),
        )
        .unwrap();
        assert!(StabilityRegime::Supercritical.check(&bad, &w).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.7)).collect();
        assert!((log_log_slope(&xs, &ys).unwrap() - 0.7).abs() < 1e-12);
        assert!(log_log_slope(&[1.0], &[1.0]).is_none());
    }
}
