//! Run configuration: JSON schema types and their resolution into solver
//! inputs. The published schema lives in `schema/run-config.schema.json`.

use std::f64::consts::TAU;
use std::path::PathBuf;

use dhym_core::lab::{default_delta_grid, StabilityRegime, DEFAULT_EPSILON, DEFAULT_WEIGHT_CONSTANT};
use dhym_core::solver::{manufactured_density, validate_schedule};
use dhym_core::suites::Suite;
use dhym_core::torus::{normalize_density, FieldRecipe, FourierMode, ScalarRecipe};
use dhym_core::{Backgrounds, PhaseWindow, PotentialField, ScalarField, SolveConfig, TorusGrid};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Solve,
    Path,
    Envelope,
    Stability,
    Verify,
    Audit,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Path => "path",
            Mode::Envelope => "envelope",
            Mode::Stability => "stability",
            Mode::Verify => "verify",
            Mode::Audit => "audit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Geometry>,
    #[serde(default)]
    pub backgrounds: BackgroundRecipes,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowSpec>,
    #[serde(default)]
    pub density: DensitySpec,
    #[serde(default)]
    pub schedule: Vec<f64>,
    #[serde(default)]
    pub solver: SolveConfig,
    #[serde(default)]
    pub envelope: EnvelopeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySpec>,
    #[serde(default)]
    pub audit: AuditSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output directory; `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    /// Complex dimension.
    pub n: usize,
    /// Points per active real axis.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    /// Real axes carrying grid points; axis `2i` is `x_i`, `2i + 1` is `y_i`.
    #[serde(default = "default_active_axes")]
    pub active_axes: Vec<usize>,
    /// Period of each real axis; `2π` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<Vec<f64>>,
}

fn default_resolution() -> usize {
    16
}

fn default_active_axes() -> Vec<usize> {
    vec![0]
}

impl Geometry {
    pub fn grid(&self) -> anyhow::Result<TorusGrid> {
        let axes = 2 * self.n;
        if let Some(&a) = self.active_axes.iter().find(|&&a| a >= axes) {
            anyhow::bail!("active axis {a} out of range for n = {}", self.n);
        }
        let resolutions = (0..axes)
            .map(|a| {
                if self.active_axes.contains(&a) {
                    self.resolution
                } else {
                    1
                }
            })
            .collect();
        let periods = self.periods.clone().unwrap_or_else(|| vec![TAU; axes]);
        Ok(TorusGrid::new(self.n, resolutions, periods)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundRecipes {
    #[serde(default = "FieldRecipe::identity")]
    pub omega: FieldRecipe,
    #[serde(default = "FieldRecipe::identity")]
    pub chi: FieldRecipe,
    #[serde(default = "FieldRecipe::identity")]
    pub chi_tilde: FieldRecipe,
}

impl Default for BackgroundRecipes {
    fn default() -> Self {
        Self {
            omega: FieldRecipe::identity(),
            chi: FieldRecipe::identity(),
            chi_tilde: FieldRecipe::identity(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub theta0: f64,
    /// Upper phase bound; `(θ₀ + π)/2` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub big_theta0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    /// Constant plus Fourier modes, rescaled to `∫ f ωⁿ = ∫ ωⁿ` unless
    /// `normalize` is false.
    Recipe {
        #[serde(default = "one")]
        constant: f64,
        #[serde(default)]
        modes: Vec<FourierMode>,
        #[serde(default = "yes")]
        normalize: bool,
    },
    /// The density for which `phi_star` solves the equation at `t` (the
    /// first schedule entry when omitted).
    Manufactured {
        phi_star: ScalarRecipe,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t: Option<f64>,
    },
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl Default for DensitySpec {
    fn default() -> Self {
        DensitySpec::Recipe {
            constant: 1.0,
            modes: Vec::new(),
            normalize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSpec {
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    /// Slack in the pointwise ordering `U_{t₁} ≤ U_{t₂}`.
    #[serde(default = "default_ordering_tol")]
    pub ordering_tol: f64,
}

fn default_betas() -> Vec<f64> {
    vec![10.0, 20.0, 40.0, 80.0, 160.0]
}

fn default_ordering_tol() -> f64 {
    1e-8
}

impl Default for EnvelopeSpec {
    fn default() -> Self {
        Self {
            betas: default_betas(),
            ordering_tol: default_ordering_tol(),
        }
    }
}

/// A family of densities `f₁(1 + a·w)`, renormalized, one per amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbations {
    pub amplitudes: Vec<f64>,
    pub shape: ScalarRecipe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySpec {
    pub regime: StabilityRegime,
    pub t: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    pub calibration: Perturbations,
    pub sweep: Perturbations,
    /// Allowed shortfall of the fitted slope below the regime exponent.
    #[serde(default = "default_slope_slack")]
    pub slope_slack: f64,
}

fn default_q() -> f64 {
    2.0
}

fn default_slope_slack() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    pub suite: Suite,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSpec {
    /// `ε` in the level-set weight `C + c_t(f + ε)`.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_weight_constant")]
    pub weight_constant: f64,
    /// Exponent of the gradient diagnostic.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Largest acceptable constant of the decreasing-sequence construction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decreasing_budget: Option<f64>,
    /// Largest acceptable `K` variation over the last decade, relative to
    /// `max K`.
    #[serde(default = "default_k_variation")]
    pub max_k_variation: f64,
    #[serde(default = "default_level_samples")]
    pub level_samples: usize,
    #[serde(default = "default_overshoot")]
    pub level_overshoot: f64,
    #[serde(default = "default_delta_grid")]
    pub deltas: Vec<f64>,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_weight_constant() -> f64 {
    DEFAULT_WEIGHT_CONSTANT
}

fn default_sigma() -> f64 {
    0.5
}

fn default_k_variation() -> f64 {
    0.1
}

fn default_level_samples() -> usize {
    200
}

fn default_overshoot() -> f64 {
    3.0
}

impl Default for AuditSpec {
    fn default() -> Self {
        Self {
            epsilon: default_epsilon(),
            weight_constant: default_weight_constant(),
            sigma: default_sigma(),
            decreasing_budget: None,
            max_k_variation: default_k_variation(),
            level_samples: default_level_samples(),
            level_overshoot: default_overshoot(),
            deltas: default_delta_grid(),
        }
    }
}

/// Everything a mode needs, resolved and validated.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub backgrounds: Backgrounds,
    pub window: Option<PhaseWindow>,
    pub f: ScalarField,
    /// `φ*` of a manufactured density, sup-normalized.
    pub phi_star: Option<PotentialField>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let config: RunConfig = serde_json::from_str(text)?;
        Ok(config)
    }

    /// The configuration with the output location cleared, serialized
    /// compactly; its hash identifies the computation.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        serde_json::to_string(&c).expect("config serializes")
    }

    fn needs_window(&self) -> bool {
        !matches!(self.mode, Mode::Envelope | Mode::Verify)
    }

    /// Checks the mode-specific requirements and builds the fields.
    pub fn resolve(&self) -> anyhow::Result<Option<Resolved>> {
        if self.mode == Mode::Verify {
            let v = self
                .verify
                .as_ref()
                .ok_or_else(|| anyhow::anyhow!("verify mode needs a verify section"))?;
            if v.samples == 0 {
                anyhow::bail!("verify needs at least one sample");
            }
            if self.seed.is_none() {
                anyhow::bail!("verify mode samples randomly and needs a seed");
            }
            return Ok(None);
        }
        let geometry = self
            .geometry
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("missing geometry"))?;
        let grid = geometry.grid()?;
        let backgrounds = Backgrounds::new(
            self.backgrounds.omega.build(&grid)?,
            self.backgrounds.chi.build(&grid)?,
            self.backgrounds.chi_tilde.build(&grid)?,
        )?;
        let window = match (self.needs_window(), self.window) {
            (false, _) => None,
            (true, None) => anyhow::bail!("{} mode needs a phase window", self.mode.name()),
            (true, Some(w)) => Some(match w.big_theta0 {
                Some(upper) => PhaseWindow::new(w.theta0, upper)?,
                None => PhaseWindow::with_default_upper(w.theta0)?,
            }),
        };
        if let Some(w) = &window {
            self.solver.validate(w.theta0)?;
        }
        match self.mode {
            Mode::Solve => {
                if self.schedule.len() != 1 {
                    anyhow::bail!("solve mode needs exactly one schedule entry");
                }
                validate_schedule(&self.schedule)?;
            }
            Mode::Path | Mode::Envelope | Mode::Audit => validate_schedule(&self.schedule)?,
            Mode::Stability => {}
            Mode::Verify => unreachable!("handled above"),
        }
        let b = &self.envelope.betas;
        if b.is_empty() || b.iter().any(|x| !(x.is_finite() && *x > 0.0)) || b.windows(2).any(|w| w[1] <= w[0]) {
            anyhow::bail!("envelope betas must be positive and strictly increasing");
        }
        let (f, phi_star) = match &self.density {
            DensitySpec::Recipe {
                constant,
                modes,
                normalize,
            } => {
                let recipe = ScalarRecipe {
                    constant: *constant,
                    modes: modes.clone(),
                };
                let raw = recipe.evaluate(&grid)?;
                let f = if *normalize {
                    normalize_density(&raw, &backgrounds.omega)?
                } else {
                    raw
                };
                (f, None)
            }
            DensitySpec::Manufactured { phi_star, t } => {
                let w = window.ok_or_else(|| anyhow::anyhow!("manufactured densities need a phase window"))?;
                let t = match (t, self.schedule.first(), &self.stability) {
                    (Some(t), _, _) => *t,
                    (None, Some(t), _) => *t,
                    (None, None, Some(s)) => s.t,
                    (None, None, None) => anyhow::bail!("manufactured density needs a parameter t"),
                };
                let star = phi_star.evaluate(&grid)?;
                let (f, _) = manufactured_density(&backgrounds, t, w.theta0, &star)?;
                (f, Some(star.sup_normalize()))
            }
        };
        if f.min() <= 0.0 {
            anyhow::bail!("density must be positive");
        }
        if self.mode == Mode::Stability {
            let s = self
                .stability
                .as_ref()
                .ok_or_else(|| anyhow::anyhow!("stability mode needs a stability section"))?;
            if !(s.t > 0.0 && s.t.is_finite()) {
                anyhow::bail!("stability parameter t must be positive");
            }
            if s.calibration.amplitudes.is_empty() || s.sweep.amplitudes.len() < 2 {
                anyhow::bail!("stability needs calibration amplitudes and at least two sweep amplitudes");
            }
            s.calibration.shape.validate(&grid)?;
            s.sweep.shape.validate(&grid)?;
            let setup_window = window.expect("stability needs a window");
            s.regime.check(&backgrounds, &setup_window)?;
            if !(s.q > 1.0) {
                anyhow::bail!("stability exponent q must exceed 1");
            }
        }
        if self.mode == Mode::Audit {
            let a = &self.audit;
            if !(a.sigma > 0.0 && a.sigma < 1.0) {
                anyhow::bail!("audit sigma must lie in (0, 1)");
            }
            if !(a.epsilon > 0.0 && a.weight_constant > 0.0) || a.level_samples == 0 || !(a.level_overshoot >= 1.0) {
                anyhow::bail!("invalid level-set audit settings");
            }
            if a.deltas.is_empty() || a.deltas.iter().any(|d| !(*d > 0.0)) {
                anyhow::bail!("De Giorgi exponents must be positive");
            }
        }
        Ok(Some(Resolved {
            backgrounds,
            window,
            f,
            phi_star,
        }))
    }
}
