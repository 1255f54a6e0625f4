use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller passed arguments that violate an operation's preconditions.
    #[error("usage error: {0}")]
    Usage(String),

    /// A named parameter is out of its allowed domain.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("operator is not Hermitian (defect {defect:.3e}, allowed {allowed:.3e})")]
    NotHermitian { defect: f64, allowed: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The requested integration step exceeds the stability bound.
    #[error("integration step {step:.3e} us exceeds the stability bound {bound:.3e} us")]
    StepTooLarge { step: f64, bound: f64 },

    /// A physical invariant of the density matrix broke during integration.
    #[error("invariant breach at t = {time:.6e} us: {detail}")]
    InvariantBreach { time: f64, detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors that stem from a bad configuration or bad arguments
    /// rather than from a failure during the computation itself.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Usage(_)
                | Error::InvalidParameter { .. }
                | Error::Config(_)
                | Error::StepTooLarge { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
