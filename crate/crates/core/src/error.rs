use thiserror::Error;

/// Errors raised by the model, solvers, backtester and file readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient data: need at least 2 periods, got {0}")]
    InsufficientData(usize),
    #[error("bad data at row {row}, column {col}: {reason}")]
    BadData {
        row: usize,
        col: usize,
        reason: String,
    },
    #[error("covariance matrix is not symmetric (max relative deviation {0:.3e})")]
    AsymmetricA(f64),
    #[error(
        "covariance matrix is not positive semidefinite (min eigenvalue {min:.3e}, max {max:.3e})"
    )]
    NotPsd { min: f64, max: f64 },
    #[error("trade-off parameter tau must be positive and finite, got {0}")]
    BadTau(f64),
    #[error("cardinality bound k must lie in [1, {n}], got {k}")]
    BadK { k: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    BadDimension { expected: usize, got: usize },
    #[error("power iteration did not converge after {0} iterations")]
    EigenFailed(usize),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("penalty value increased from {prev} to {next} at inner iteration {iteration}")]
    MonotonicityViolation {
        iteration: usize,
        prev: f64,
        next: f64,
    },
    #[error("support set is empty or out of range")]
    BadSupport,
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
    #[error("out-of-sample standard deviation undefined: {0}")]
    SigmaUndefined(String),
    #[error("Sharpe ratio undefined: zero risk with nonzero return {0}")]
    SharpeUndefined(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
