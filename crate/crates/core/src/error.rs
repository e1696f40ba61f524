use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input outside the domain where a formula is defined.
    #[error("{op}: domain error: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("invalid parameter `{name}`: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    #[error("length mismatch: expected {expected} values, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    /// Adaptive stepping could not meet the tolerance without shrinking the
    /// step below the floating-point resolution of `t`.
    #[error("step size underflow at t = {t:e} s (h = {step:e} s); problem too stiff for the requested tolerance")]
    StepSizeUnderflow { t: f64, step: f64 },

    #[error("step limit of {steps} exceeded at t = {t:e} s")]
    TooManySteps { t: f64, steps: usize },

    #[error("config line {line}: key `{key}`: {detail}")]
    Config {
        line: usize,
        key: String,
        detail: String,
    },
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn param(name: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            detail: detail.into(),
        }
    }
}
