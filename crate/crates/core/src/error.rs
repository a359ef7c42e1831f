use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("arithmetic on the unbounded interval [-inf, inf]")]
    Unbounded,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("interval exponential needs 2^l (k + 2) > {norm} (k = {k}, l = {l}); smallest admissible l is {min_l}")]
    ScalingTooSmall { k: u32, l: u32, norm: f64, min_l: u32 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("time {t} outside [0, {dt}]")]
    TimeOutOfRange { t: f64, dt: f64 },

    #[error("overestimator hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("invalid solver configuration: {0}")]
    ConfigInvalid(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}
