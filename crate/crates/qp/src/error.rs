use campc_geometry::GeometryError;
use campc_model::ModelError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpError {
    #[error("{what}: expected dimension {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("cost factor is singular")]
    SingularFactor,
    #[error("row tag {0:?} appears more than once")]
    DuplicateTag(crate::RowTag),
    #[error("retained index {index} out of range for step {step} ({rows} rows)")]
    IndexOutOfRange { step: usize, index: usize, rows: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T> = std::result::Result<T, QpError>;
