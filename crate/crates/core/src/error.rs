use thiserror::Error;

/// Errors raised by grid, band, solver and criteria operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LfdError {
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("non-finite value at grid index {index}")]
    NonFinite { index: usize },
    #[error("negative value at grid index {index}")]
    Negative { index: usize },
    #[error("standard deviation must be positive, got {0}")]
    NonPositiveSd(f64),
    #[error("exponential energy density requires nonnegative support, found point {0}")]
    NegativeSupport(f64),
    #[error("parameter order violated: {0}")]
    ParameterOrder(String),
    #[error("densities or bands live on different grids")]
    GridMismatch,
    #[error("band ordering violated at grid index {index}: lower exceeds upper")]
    OrderingViolation { index: usize },
    #[error("lower envelope has mass {mass} > 1")]
    LowerMassExceedsOne { mass: f64 },
    #[error("upper envelope has mass {mass} < 1")]
    UpperMassBelowOne { mass: f64 },
    #[error("contamination rate {0} outside [0, 1]")]
    InvalidEps(f64),
    #[error("envelope family is empty")]
    EmptyFamily,
    #[error("lambda must be nonnegative, got {0}")]
    NegativeLambda(f64),
    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("unknown divergence kind `{0}`")]
    UnknownKind(String),
    #[error(
        "no root of the normalisation function below c_max = {c_max} (g(c_max) = {g_at_max}); \
         the bands have (almost) disjoint supports, rerun with alpha > 0 (e.g. alpha = 1)"
    )]
    NoRoot { c_max: f64, g_at_max: f64 },
    #[error("clip projection cannot normalise inside the band: {0}")]
    ProjectionInfeasible(String),
    #[error("initial density is not a member of its band")]
    InfeasibleInit,
    #[error("no convergence after {iterations} iterations (last sup-norm step {last_step})")]
    MaxIterExceeded {
        iterations: usize,
        last_step: f64,
        tv_history: Vec<f64>,
    },
    #[error("ratio table needs at least two defined points")]
    TooFewPoints,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = LfdError> = std::result::Result<T, E>;
