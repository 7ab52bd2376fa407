use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("ambient dimension must be at least 1")]
    ZeroDimension,
    #[error("empty point set")]
    EmptyInput,
    #[error("shape matrix is singular")]
    Singular,
    #[error("polytope is empty")]
    EmptySet,
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("polytope is not full-dimensional (Chebyshev radius {radius:e})")]
    NotFullDimensional { radius: f64 },
    #[error("vertex enumeration unsupported: {0}")]
    VertexEnumeration(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;
