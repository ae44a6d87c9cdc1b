use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

impl Error {
    /// Failures caused by the numbers rather than by the caller's arguments.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_) | Error::NonFinite(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

pub(crate) fn ensure_dims(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(msg()))
    }
}
