use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A result would leave the representable range (e.g. the inverse
    /// semigroup at large `λ_n t`).
    #[error("range error: {0}")]
    Range(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    /// A scheme path blew up; `step` is the index of the offending step.
    #[error("integration failed at step {step}: mode {mode} reached {value:e}")]
    IntegrationFailure { step: usize, mode: usize, value: f64 },
    #[error("rate fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! domain {
    ($($arg:tt)*) => {
        $crate::Error::Domain(alloc::format!($($arg)*))
    };
}
pub(crate) use domain;
