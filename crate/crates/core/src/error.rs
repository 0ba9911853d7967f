use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension: n = {0}, need n >= 2")]
    InvalidDimension(usize),
    #[error("basis mismatch: expected length {expected}, found {found}")]
    BasisMismatch { expected: usize, found: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("integration diverged after t = {last_valid}")]
    IntegrationDiverged { last_valid: f64 },
    #[error("time {t} outside [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("precondition failed: {reason} (residual {residual:e})")]
    Precondition { reason: String, residual: f64 },
    #[error("{criterion} inapplicable: {reason} (residual {residual:e})")]
    Inapplicable {
        criterion: &'static str,
        reason: String,
        residual: f64,
    },
    #[error("field does not vanish at the endpoints (residual {0:e})")]
    Endpoint(f64),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn precondition(reason: &str, residual: f64) -> Error {
    Error::Precondition {
        reason: reason.into(),
        residual,
    }
}

pub(crate) fn inapplicable(criterion: &'static str, reason: &str, residual: f64) -> Error {
    Error::Inapplicable {
        criterion,
        reason: reason.into(),
        residual,
    }
}
