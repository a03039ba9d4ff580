use thiserror::Error;

/// Errors raised by the dispatch model, solvers and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DispatchError {
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("capacity error: {0}")]
    Capacity(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {message} (residual {residual:e})")]
    Numerical { message: String, residual: f64 },
}

pub type Result<T> = std::result::Result<T, DispatchError>;

pub(crate) fn ensure_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(DispatchError::Dimension {
            what,
            expected,
            got,
        })
    }
}
