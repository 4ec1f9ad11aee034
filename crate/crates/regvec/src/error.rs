use thiserror::Error;

/// Library-wide error type.  The variants map one-to-one onto the CLI exit
/// codes: contract violations and degenerate inputs are caller errors,
/// numeric failures are breakdowns of an iterative scheme, verification
/// failures come from the oracles.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("verification failure: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }
    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
    pub fn verification(msg: impl Into<String>) -> Self {
        Error::Verification(msg.into())
    }
}
