//! Error types shared across the crate.

use thiserror::Error;

/// Numerical rank deficiency detected while factorizing a Gram matrix.
///
/// Raised when a Cholesky pivot falls at or below `dim * eps * max|B|`,
/// which signals that the block being orthonormalized has (numerically)
/// linearly dependent columns. Solver drivers surface this in the
/// [`SolveReport`](crate::solver::SolveReport) instead of panicking; study
/// tables render the affected cell as `x`.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("basis breakdown in {context}: pivot {pivot:.3e} <= {threshold:.3e} at column {column}")]
pub struct BasisBreakdown {
    /// Which kernel detected the breakdown (`"a-cholqr"`, `"pre-cholqr"`, ...).
    pub context: &'static str,
    /// Column (within the Gram matrix) whose pivot failed.
    pub column: usize,
    /// The offending pivot value.
    pub pivot: f64,
    /// The threshold it was compared against.
    pub threshold: f64,
}

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error(transparent)]
    Breakdown(#[from] BasisBreakdown),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
