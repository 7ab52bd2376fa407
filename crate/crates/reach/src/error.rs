use campc_geometry::GeometryError;
use campc_model::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReachError {
    #[error("geometry failure at step {step}: {source}")]
    Geometry {
        step: usize,
        #[source]
        source: GeometryError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("backward reachable set at step {step} is empty")]
    EmptyBackward { step: usize },
    #[error("input set is not a box; pass an outer box (see `outer_input_box`) instead")]
    NonZonotopicInput,
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("artifact version {found} is not supported (expected {expected})")]
    Version { expected: u32, found: u32 },
    #[error("artifact was built for problem {found}, current problem is {expected}; rerun the offline stage")]
    ChecksumMismatch { expected: String, found: String },
    #[error("malformed artifact: {0}")]
    Malformed(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ReachError {
    pub(crate) fn at(step: usize) -> impl FnOnce(GeometryError) -> ReachError {
        move |source| ReachError::Geometry { step, source }
    }
}

pub type Result<T> = std::result::Result<T, ReachError>;
