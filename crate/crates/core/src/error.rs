use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("invalid phase window: theta0 = {theta0}, Theta0 = {big_theta0}")]
    InvalidWindow { theta0: f64, big_theta0: f64 },

    #[error("phase {phase} outside (0, pi)")]
    PhaseOutOfRange { phase: f64 },

    #[error("product magnitude {magnitude:e} exceeds the safe range")]
    Magnitude { magnitude: f64 },

    #[error("index k = {k} outside [{lo}, {hi}]")]
    IndexOutOfRange { k: usize, lo: usize, hi: usize },

    #[error("spectrum outside the positive cone Gamma^{k}")]
    ConeViolation { k: usize },

    #[error("metric is not positive definite at grid point {point}")]
    NonPositiveMetric { point: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("density normalization failed: relative defect {defect:e}")]
    Normalization { defect: f64 },

    #[error("spectrum left the admissible window at grid point {point} (margin {margin:e})")]
    ConeExit { point: usize, margin: f64 },

    #[error("form lost positivity at grid point {point} (smallest eigenvalue {min_eigenvalue:e})")]
    PositivityExit { point: usize, min_eigenvalue: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("Krylov solve stalled at relative residual {relative_residual:e} after {iterations} iterations")]
    LinearSolveFailure { iterations: usize, relative_residual: f64 },

    #[error("no sign change of the balance map on [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("hypothesis fails on sample pair ({i}, {j}): lhs {lhs:e} > rhs {rhs:e}")]
    HypothesisFail { i: usize, j: usize, lhs: f64, rhs: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("io: {0}")]
    Io(String),

    #[error("checksum mismatch: expected {expected}, found {found}")]
    Checksum { expected: String, found: String },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
