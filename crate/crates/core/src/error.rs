use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("duplicate entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },
    #[error("composite map is nonzero: d_out * d_in has {nonzero} nonzero entries")]
    NotAComplex { nonzero: usize },
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("not a cocycle: {0}")]
    NotACocycle(String),
    #[error("not normalized: {0}")]
    NotNormalized(String),
    #[error("not invariant: {0}")]
    NotInvariant(String),
    #[error("not closed: {0}")]
    NotClosed(String),
    #[error("not nilpotent: {0}")]
    NotNilpotent(String),
    #[error("not central: {0}")]
    NotCentral(String),
    #[error("element {0} does not satisfy the required condition: {1}")]
    BadElement(String, String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
