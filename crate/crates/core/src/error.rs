use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("SOE certification failed: sampled error {max_error:e} exceeds {allowed:e}")]
    CertificationFailure { max_error: f64, allowed: f64 },

    #[error("t = {t:e} lies outside the certified interval [{lower:e}, {upper:e}]")]
    OutOfDomain { t: f64, lower: f64, upper: f64 },

    #[error("SOE tolerance {epsilon:e} exceeds the admissible bound {bound:e}")]
    ToleranceViolation { epsilon: f64, bound: f64 },

    #[error("maximum step ratio {rho_max} exceeds 7/4")]
    StepRatio { rho_max: f64 },

    #[error("spatial step h = {h:e} is not below 2a/|b| = {bound:e}")]
    Inadmissible { h: f64, bound: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("zero pivot in tridiagonal elimination at row {row}")]
    ZeroPivot { row: usize },

    #[error("history recursion out of sequence: {0}")]
    StateOrder(String),

    #[error("kernel A_0 at level {level} is not positive")]
    SingularKernel { level: usize },

    #[error("boundary data on the {side} side is time dependent but has no Caputo derivative")]
    MissingCaputo { side: &'static str },

    #[error("initial data must vanish on the boundary, got {left:e} and {right:e}")]
    IncompatibleData { left: f64, right: f64 },

    #[error("non-finite value in the solution at time level {level}")]
    NonFinite { level: usize },

    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
