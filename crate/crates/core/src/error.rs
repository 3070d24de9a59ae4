use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("atom spaces differ: {left} atoms vs {right} atoms")]
    SpaceMismatch { left: usize, right: usize },
    #[error("payoff must have at least one atom")]
    EmptyPayoff,
    #[error("payoff value at atom {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("unknown distribution spec: {0}")]
    UnknownDistribution(String),
    #[error("brute-force enumeration refused for n = {0} (limit is 8)")]
    TooLarge(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("flag precondition not met: {0}")]
    FlagViolation(String),
    #[error("representation set is empty")]
    EmptyRepresentation,
    #[error("monotonicity violated: {0}")]
    Monotonicity(String),
    #[error("invalid market: {0}")]
    InvalidMarket(String),
    #[error("Δ₂ undefined for nonfinite Φ")]
    NonFiniteYoung,
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
