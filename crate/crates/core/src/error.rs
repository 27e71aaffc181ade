use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix text is empty")]
    EmptyInput,

    #[error("ragged rows: row {row} has {found} values, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-square grid: {rows} rows of {cols} columns")]
    NotSquare { rows: usize, cols: usize },

    #[error("unparseable value {token:?} at row {row}, column {col}")]
    ParseValue {
        row: usize,
        col: usize,
        token: String,
    },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not orthogonal: defect {defect:e} exceeds tolerance {tolerance:e}")]
    NotOrthogonal { defect: f64, tolerance: f64 },

    #[error("matrix determinant has magnitude {det}, expected 1")]
    DeterminantNotUnit { det: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point is not stationary: gradient norm {grad_norm:e} exceeds {tolerance:e}")]
    NotStationary { grad_norm: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
