//! Computable counterparts of the a priori estimates: envelopes, level-set
//! masses, De Giorgi thresholds, the L^∞ and gradient audits, stability
//! experiments and the decreasing-sequence construction.

mod audits;
mod degiorgi;
mod envelope;
mod levels;
mod stability;

pub use audits::{
    decreasing_limit_audit, gradient_diagnostic, linfty_audit, DecreasingReport, GradientReport, KSample, LinftyReport,
    DECREASING_C_STEP, GRADIENT_L_STEP,
};
pub use degiorgi::{
    de_giorgi_threshold, de_giorgi_verify, default_delta_grid, fit_de_giorgi, minimal_constant, DeGiorgiFit,
    DeGiorgiReport, DecaySamples,
};
pub use envelope::{envelope_estimate, envelope_ordering_excess, EnvelopeRun};
pub use levels::{
    level_mass, level_profile, log_moment, lq_norm, total_excess, weight_density, LevelData, DEFAULT_EPSILON,
    DEFAULT_WEIGHT_CONSTANT,
};
pub use stability::{
    calibrate_constant, closed_gamma2, log_log_slope, perturbed_density, required_constant, stability_experiment,
    stability_pair, stability_report, stability_sweep, StabilityPair, StabilityRegime, StabilityReport, StabilitySetup,
    StabilitySweep,
};
