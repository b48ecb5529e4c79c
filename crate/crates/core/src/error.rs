use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid sparse structure: {0}")]
    InvalidStructure(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is numerically singular (pivot {pivot:.3e} at column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error(
        "coarse matrix M = Z^H A Z is numerically singular (pivot {pivot:.3e} at column {column}); \
         remove nearly dependent columns of Z first (complete-pivot column selection)"
    )]
    SingularCoarseMatrix { column: usize, pivot: f64 },

    #[error("operator does not provide an adjoint action")]
    AdjointUnavailable,

    #[error("{0} did not converge after {1} iterations")]
    NoConvergence(&'static str, usize),

    #[error("matrix market: {0}")]
    MatrixMarket(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
