use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrError {
    /// A precondition on shapes, indices or parameters was violated.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, TrError>;

macro_rules! domain {
    ($($arg:tt)*) => {
        $crate::error::TrError::Domain(format!($($arg)*))
    };
}
pub(crate) use domain;
