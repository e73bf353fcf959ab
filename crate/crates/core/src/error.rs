use std::io;

/// Errors produced by the photon-cube library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid plane range [{start}, {end}) for a cube of {planes} planes")]
    InvalidRange {
        start: usize,
        end: usize,
        planes: usize,
    },

    #[error("value outside the estimator domain: {0}")]
    Domain(String),

    #[error("{kernel} kernel needs {required} bytes of core RAM, budget is {budget}")]
    BudgetExceeded {
        kernel: String,
        required: usize,
        budget: usize,
    },

    #[error("shift of {shift} px exceeds the neighbour exchange reach of {reach} px")]
    ExchangeReach { shift: usize, reach: usize },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    /// True for errors caused by hardware resource constraints rather than bad input.
    pub fn is_constraint_violation(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. } | Error::ExchangeReach { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
