use thiserror::Error;

/// Errors raised by the urn library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("weight table has {len} terms, index {index} requested")]
    TableOverrun { index: u64, len: usize },

    #[error("operation requires two urns and two colors, got {urns} urns and {colors} colors")]
    NotTwoByTwo { urns: usize, colors: usize },

    #[error("singular tridiagonal system at row {0}")]
    Singular(usize),

    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
