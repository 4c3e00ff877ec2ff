use thiserror::Error;

/// Errors produced by the thermogauge library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: |M[{row}][{col}] - conj(M[{col}][{row}])| = {deviation:e} exceeds {tol:e}")]
    NotHermitian {
        row: usize,
        col: usize,
        deviation: f64,
        tol: f64,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("eigensolver failed to converge for a {dim}x{dim} matrix")]
    EigensolverFailure { dim: usize },

    #[error("cluster index {index} out of range (structure has {count} clusters)")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("non-finite parameter: {0}")]
    NonFiniteParameter(String),

    #[error("closed form is singular: {0}")]
    SingularPoint(String),

    #[error("invalid angular momentum: 2j = {twice_j} (must be a positive integer)")]
    InvalidJ { twice_j: f64 },

    #[error("degenerate spectrum at t = {time}: gap {gap:e} within tolerance {tol:e}")]
    DegeneracyCrossing { time: f64, gap: f64, tol: f64 },

    #[error(
        "grid too coarse between t = {from} and t = {to}: eigenvector overlap {overlap:.3} is far from a permutation"
    )]
    GridTooCoarse { from: f64, to: f64, overlap: f64 },

    #[error("invalid cluster pattern: {0}")]
    InvalidPattern(String),

    #[error("malformed matrix JSON: {0}")]
    Json(String),
}

impl Error {
    /// True for errors raised by numerical breakdown rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EigensolverFailure { .. }
                | Error::InternalInconsistency(_)
                | Error::SingularPoint(_)
                | Error::DegeneracyCrossing { .. }
                | Error::GridTooCoarse { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
