//! The approximation equation in the form
//! `Re Π(λᵢ + i) − cot θ₀ Im Π(λᵢ + i) = r(z)`, `λ = λ(A + √−1∂∂̄φ)`.
//!
//! Inside the window the partials of the left side equal
//! `Pₖ sin(θ₀ − Θₖ) / sin θ₀ > 0`, where `Pₖ e^{iΘₖ} = Π_{j≠k}(λⱼ + i)`,
//! so Newton works on this polynomial form rather than on the quotient.

use super::engine::{Engine, PointLaw, PointValue};
use super::{PathState, SolveConfig};
use crate::error::{Error, Result};
use crate::phase::{self, PhaseWindow, Spectrum};
use crate::torus::{
    cohomological_ct, complex_hessian, mean_against, mixed_re_im, Backgrounds, HermitianField, PotentialField,
};

/// Data of one pointwise dHYM-type equation on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct DhymProblem {
    /// Background form `A`; the unknown form is `A + √−1∂∂̄φ`.
    pub base: HermitianField,
    pub omega: HermitianField,
    pub window: PhaseWindow,
    /// Pointwise right-hand side `r = c·f`.
    pub rhs: PotentialField,
    /// The constant `c`.
    pub constant: f64,
}

impl DhymProblem {
    /// Approximation equation at parameter `t`: `A = χ + χ̃ + tω`, `r = c_t f`.
    pub fn path(backgrounds: &Backgrounds, t: f64, f: &PotentialField, window: PhaseWindow) -> Result<Self> {
        let c_t = cohomological_ct(
            &backgrounds.chi,
            &backgrounds.chi_tilde,
            &backgrounds.omega,
            t,
            window.theta0,
            f,
        )?;
        Ok(Self {
            base: backgrounds.path_form(t),
            omega: backgrounds.omega.clone(),
            window,
            rhs: f.map(|v| c_t * v),
            constant: c_t,
        })
    }

    /// Equation with a constant right-hand side `c`.
    pub fn with_constant_rhs(base: HermitianField, omega: HermitianField, window: PhaseWindow, c: f64) -> Result<Self> {
        base.grid().ensure_same(omega.grid())?;
        let rhs = PotentialField::constant(base.grid(), c);
        Ok(Self {
            base,
            omega,
            window,
            rhs,
            constant: c,
        })
    }
}

struct DhymLaw<'a> {
    window: PhaseWindow,
    cot: f64,
    rhs: &'a [f64],
    safety: f64,
    /// Gradient of the quotient `(Re − r)/Im` instead of the polynomial form.
    quotient_gradient: bool,
}

impl PointLaw for DhymLaw<'_> {
    fn eval(&self, point: usize, lambda: &[f64], _u: f64) -> Option<PointValue> {
        let s = Spectrum::from_slice(lambda).ok()?;
        let report = phase::window_membership(&s, &self.window);
        let (re, im) = phase::sigma_product(&s).ok()?;
        let r = self.rhs[point];
        let gradient = if self.quotient_gradient {
            phase::gradient_from_parts(lambda, re - r, im)
        } else {
            phase::balance_gradient(lambda, self.cot)
        };
        Some(PointValue {
            residual: re - self.cot * im - r,
            scale: im.max(f64::MIN_POSITIVE),
            gradient,
            margin: report.margin(),
        })
    }

    fn zeroth_order(&self) -> f64 {
        0.0
    }

    fn mean_free(&self) -> bool {
        true
    }

    fn safety(&self) -> f64 {
        self.safety
    }

    fn exit_error(&self, point: usize, margin: f64) -> Error {
        Error::ConeExit { point, margin }
    }
}

/// Converged solution of a [`DhymProblem`].
#[derive(Debug, Clone, PartialEq)]
pub struct DhymSolution {
    /// Sup-normalized potential.
    pub phi: PotentialField,
    pub iterations: usize,
    pub linear_iterations: usize,
    /// Sup of the mean-projected residual `(G − ⟨G⟩)/Im`.
    pub residual_sup: f64,
    /// `|⟨G⟩|`, the `ωⁿ`-average of `G = Re − cot θ₀ Im − r`.
    pub compatibility_defect: f64,
    pub margin_min: f64,
    pub trace_min: f64,
    pub history: Vec<f64>,
}

impl DhymProblem {
    pub fn solve(&self, phi0: &PotentialField, config: &SolveConfig) -> Result<DhymSolution> {
        config.validate(self.window.theta0)?;
        phi0.grid().ensure_same(self.base.grid())?;
        self.rhs.grid().ensure_same(self.base.grid())?;
        let law = DhymLaw {
            window: self.window,
            cot: self.window.cot_theta0(),
            rhs: self.rhs.values(),
            safety: config.cone_safety,
            quotient_gradient: false,
        };
        let engine = Engine::new(&law, &self.base, &self.omega, config);
        let out = engine.solve(phi0.values())?;
        let phi = PotentialField::new(self.base.grid().clone(), out.u)?.sup_normalize();
        Ok(DhymSolution {
            phi,
            iterations: out.iterations,
            linear_iterations: out.linear_iterations,
            residual_sup: out.residual_sup,
            compatibility_defect: out.mean_residual.abs(),
            margin_min: out.margin_min,
            trace_min: out.trace_min,
            history: out.history,
        })
    }
}

/// Pointwise `(Re − r)/Im − cot θ₀` at `φ`.
pub fn residual_field(problem: &DhymProblem, phi: &PotentialField) -> Result<PotentialField> {
    let x = problem.base.add(&complex_hessian(phi))?;
    let spec = crate::torus::relative_spectrum(&x, &problem.omega)?;
    let cot = problem.window.cot_theta0();
    let mut out = Vec::with_capacity(spec.len());
    for p in 0..spec.len() {
        let s = spec.spectrum(p);
        let report = phase::window_membership(&s, &problem.window);
        if !report.in_window {
            return Err(Error::ConeExit {
                point: p,
                margin: report.margin(),
            });
        }
        out.push(phase::operator_value(&s, problem.rhs.values()[p])? - cot);
    }
    PotentialField::new(phi.grid().clone(), out)
}

/// Directional derivative of [`residual_field`] at `φ` in direction `ψ`.
pub fn residual_derivative(
    problem: &DhymProblem,
    phi: &PotentialField,
    psi: &PotentialField,
) -> Result<PotentialField> {
    let config = SolveConfig::default();
    let law = DhymLaw {
        window: problem.window,
        cot: problem.window.cot_theta0(),
        rhs: problem.rhs.values(),
        safety: 0.0,
        quotient_gradient: true,
    };
    let engine = Engine::new(&law, &problem.base, &problem.omega, &config);
    let ev = engine.evaluate(phi.values()).ok_or(Error::ConeExit {
        point: 0,
        margin: f64::NAN,
    })?;
    if ev.margin_min <= 0.0 {
        return Err(Error::ConeExit {
            point: ev.worst_point,
            margin: ev.margin_min,
        });
    }
    PotentialField::new(phi.grid().clone(), engine.apply_linearization(&ev.coef, psi.values()))
}

/// Solves the approximation equation at `t` starting from `φ₀`.
pub fn newton_solve(
    backgrounds: &Backgrounds,
    phi0: &PotentialField,
    t: f64,
    f: &PotentialField,
    window: PhaseWindow,
    config: &SolveConfig,
) -> Result<PathState> {
    let problem = DhymProblem::path(backgrounds, t, f, window)?;
    let sol = problem.solve(phi0, config)?;
    Ok(PathState {
        t,
        phi: sol.phi,
        c_t: problem.constant,
        cone_margin_min: sol.margin_min,
        residual_sup: sol.residual_sup,
        newton_iters: sol.iterations,
        compatibility_defect: sol.compatibility_defect,
        trace_min: sol.trace_min,
    })
}

/// Density `f` for which `φ*` solves the approximation equation at `t`:
/// `f = (Re − cot θ₀ Im)(χ + χ̃ + tω + √−1∂∂̄φ*) / c`, with `c` its
/// `ωⁿ`-average. Returns `(f, c)`; fails unless `f > 0` everywhere.
pub fn manufactured_density(
    backgrounds: &Backgrounds,
    t: f64,
    theta0: f64,
    phi_star: &PotentialField,
) -> Result<(PotentialField, f64)> {
    let x = backgrounds.path_form(t).add(&complex_hessian(phi_star))?;
    let (re, im) = mixed_re_im(&x, &backgrounds.omega)?;
    let cot = phase::cot(theta0);
    let g = re.zip_map(&im, |r, i| r - cot * i)?;
    let c = mean_against(&g, &backgrounds.omega)?;
    if !(c > 0.0) {
        return Err(Error::InvalidInput(format!(
            "manufactured constant {c} is not positive"
        )));
    }
    let f = g.map(|v| v / c);
    if f.min() <= 0.0 {
        return Err(Error::InvalidInput("manufactured density is not positive".into()));
    }
    Ok((f, c))
}
