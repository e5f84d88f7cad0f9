use thiserror::Error;

/// Errors raised by the library.
///
/// Every variant belongs to one of three categories (see [`ErrorKind`]) which the CLI maps
/// onto its exit codes.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("strategy has {extracts} extract steps, exact enumeration is limited to {limit}; use Monte Carlo mode")]
    CapExceeded { extracts: usize, limit: usize },

    #[error("could not parse number {text:?}: {reason}")]
    Parse { text: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Precondition,
    CapExceeded,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Invalid(_) | Error::Domain(_) | Error::Parse { .. } => ErrorKind::Validation,
            Error::Precondition(_) => ErrorKind::Precondition,
            Error::CapExceeded { .. } => ErrorKind::CapExceeded,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
