use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error("resource limit exceeded: {what} (cap {cap})")]
    ResourceLimit { what: String, cap: u64 },
    #[error("strong separation condition not certified: {0}")]
    SscViolation(String),
    #[error("window violation: eps = {eps} must be below {limit}")]
    WindowViolation { eps: f64, limit: f64 },
    #[error("certificate failed: {0}")]
    Certificate(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
