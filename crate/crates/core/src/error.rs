use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("alphabet order must be at least 2 and at most 255, got {0}")]
    InvalidOrder(usize),

    #[error("digit {digit} is outside the alphabet 1..={order}")]
    InvalidDigit { digit: u32, order: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index window [{from}, {to}) is outside the generated range [{min}, {max})")]
    OutOfRange { from: i64, to: i64, min: i64, max: i64 },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
