use thiserror::Error;

/// Errors raised by the operators, dense kernels, solvers and the
/// classification layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    /// Cholesky breakdown. `index` is the first pivot that failed and `pivot`
    /// its (non-positive) value.
    #[error("matrix is not symmetric positive definite: pivot {index} = {pivot:e}")]
    NotSpd { index: usize, pivot: f64 },

    #[error("trace ratio is unbounded: {0}")]
    Unbounded(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("input is not orthonormal: {0}")]
    NotOrthonormal(String),

    #[error("all expansion candidates were linearly dependent on the basis")]
    EmptyExpansion,

    #[error("size guard exceeded: {0}")]
    TooLarge(String),

    #[error("stratification failed: {0}")]
    Stratification(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
