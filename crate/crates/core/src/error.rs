use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("sample size {got} is below the minimum of {min}")]
    EmptySample { min: usize, got: usize },

    #[error("coordinate {coord} value {value} lies outside the domain [{lo}, {hi}]")]
    Domain { coord: usize, value: f64, lo: f64, hi: f64 },

    #[error("no root for target {target} at coordinate {coord}: component range is [{lo}, {hi}]")]
    NoRoot {
        coord: usize,
        target: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid coefficients: {0}")]
    Coefficients(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate good set: {0}")]
    DegenerateSet(String),

    #[error("every sampled pair is degenerate (zero distance in the varied coordinate)")]
    DegeneratePairs,

    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("confidence {0} outside (0, exp(-1/e))")]
    ConfidenceRange(f64),

    #[error("error budgets sum to {got}, expected {expected}")]
    BudgetMismatch { expected: f64, got: f64 },

    #[error("unbounded hypothesis class: {0}")]
    Unbounded(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
