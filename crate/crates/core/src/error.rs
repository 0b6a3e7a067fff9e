//! Error taxonomy shared by every module in the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A numeric argument is outside its physical or numeric domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two sequences that must agree in length do not.
    #[error("length mismatch in {context}: {left} vs {right}")]
    LengthMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    /// An operation was invoked in a state its contract forbids.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// A statistic has no defined value for this input (e.g. zero variance).
    #[error("undefined normalization: {0}")]
    UndefinedNormalization(String),

    /// A scenario file or field failed validation.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Shorthand for the most common error kind.
pub fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl Error {
    /// True for errors that indicate a malformed scenario rather than a failed run.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidParameter(_) | Error::Config(_))
    }
}
