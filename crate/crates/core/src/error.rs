//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by model construction, statistics, and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sample length {got} does not match model sample size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite sample value {value} at index {index}")]
    NonFiniteSample { index: usize, value: f64 },

    #[error("statistic requires a nonempty sample")]
    EmptySample,

    #[error("explicit signal table has no entry for n = {0}")]
    MissingExplicitEntry(u64),

    #[error("quantile argument must lie strictly inside (0, 1), got {0}")]
    QuantileDomain(f64),

    #[error("q-function bounds require x > 0, got {0}")]
    QBoundsDomain(f64),

    #[error("regime {0:?} carries no rate function")]
    NoRateFunction(crate::regimes::Regime),

    #[error("rate function mismatch: fit used {fit:?} but regime prescribes {regime:?}")]
    RateFunctionMismatch {
        fit: crate::regimes::RateFn,
        regime: crate::regimes::RateFn,
    },

    #[error("need at least {need} usable points, got {got}")]
    TooFewPoints { need: usize, got: usize },

    #[error("all rate-function values are equal; slope is undefined")]
    DegenerateAbscissa,

    #[error("calibration needs at least {need} null simulations for level {level}, got {got}")]
    InsufficientCalibration { need: u64, got: u64, level: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
