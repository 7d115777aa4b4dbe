use thiserror::Error;

/// Errors raised by the predictors, transforms and linear-algebra kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient history: need {needed} past observations, have {available}")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("{routine} failed to converge after {iterations} iterations")]
    NumericFailure {
        routine: &'static str,
        iterations: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(invalid(format!("{what}: non-finite value at index {i}"))),
        None => Ok(()),
    }
}
