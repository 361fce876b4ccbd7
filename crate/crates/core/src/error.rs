use thiserror::Error;

/// Errors raised by the numerical operations of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("chart error: {0}")]
    Chart(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("excluded zero mode: {0}")]
    ExcludedMode(String),
    #[error("support overflow: {0}")]
    Overflow(String),
    #[error("weight lies on an indicial root: {0}")]
    Pole(String),
    #[error("step size underflow: {0}")]
    Stiffness(String),
    #[error("classification error: {0}")]
    Classification(String),
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("quadrature resolution: {0}")]
    Resolution(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
