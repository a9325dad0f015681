use thiserror::Error;

/// Errors raised by the estimators and signal generators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FractalError {
    /// An argument violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The data could not support a dimension estimate (degenerate signal,
    /// too few usable scales, constant box counts, ...).
    #[error("estimation failed: {reason} ({retained} usable points, {excluded} excluded)")]
    Estimation {
        reason: String,
        retained: usize,
        excluded: usize,
    },
}

impl FractalError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FractalError::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, FractalError>;
