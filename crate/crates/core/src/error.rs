use thiserror::Error;

/// Errors raised by the engine.
///
/// Search exhaustion is not an error: searches return `Option`/outcome enums.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("cannot factor {0}: cofactor exceeds 64 bits after trial division")]
    TooLarge(String),
    #[error("hypothesis check `{check}` failed: {detail}")]
    Precondition { check: &'static str, detail: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("square class product overflows 64 bits")]
    Overflow,
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(check: &'static str, detail: impl Into<String>) -> Self {
        Error::Precondition {
            check,
            detail: detail.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
