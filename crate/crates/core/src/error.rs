use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("singular pivot at row {row} (|pivot| = {pivot:e})")]
    SingularPivot { row: usize, pivot: f64 },
    #[error("no sign change on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("non-finite function value at x = {0}")]
    NonFinite(f64),
    #[error("Lane-Emden profile has no zero before r = {0}")]
    NoFirstZero(f64),
    #[error("Newton failed at lambda = {lambda} after {iters} iterations (residual {residual:e})")]
    NoConvergence {
        lambda: f64,
        iters: usize,
        residual: f64,
    },
    #[error("degenerate bordered system (indicator {0:e})")]
    DegenerateBorder(f64),
    #[error("unsupported regime: {0}")]
    Regime(String),
    #[error("eigensolver did not converge: {0}")]
    Eigen(String),
    #[error("monotonicity violated: {0}")]
    Monotonicity(String),
    #[error("cache: {0}")]
    Cache(String),
}

pub type Result<T> = std::result::Result<T, Error>;
