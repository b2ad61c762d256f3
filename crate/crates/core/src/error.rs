use alloc::string::String;

/// Errors raised by the modeling, critic and training routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("plane has no positive mass")]
    EmptyPlane,
    #[error("no samples fall inside the requested region")]
    EmptyRegion,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("no rule fires for the given inputs")]
    CoverageViolation,
    #[error("reward range for input {0} is not nested inside its input range")]
    NotNested(usize),
    #[error("fuzzy system has no backing planes")]
    NoBackingPlanes,
    #[error("filtering removed every sample; run more exploration episodes")]
    EmptyFilter,
    #[error("training diverged at step {step}: penalty fraction {fraction:.3} over the last {window} steps")]
    Diverged { step: usize, fraction: f64, window: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub(crate) fn finite(v: f64, what: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what))
    }
}
