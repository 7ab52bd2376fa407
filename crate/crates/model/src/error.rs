use campc_geometry::GeometryError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{what}: expected dimension {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("weight {0} is not symmetric")]
    NotSymmetric(&'static str),
    #[error("weight {0} is not positive semidefinite")]
    NotPositiveSemidefinite(&'static str),
    #[error("weight {0} is not positive definite")]
    NotPositiveDefinite(&'static str),
    #[error("horizon must be at least 1")]
    InvalidHorizon,
    #[error("expected {expected} state constraint sets, found {found}")]
    StateSetCount { expected: usize, found: usize },
    #[error("terminal set iteration did not converge within {0} iterations")]
    TerminalNotConverged(usize),
    #[error("terminal set is empty")]
    EmptyTerminalSet,
    #[error("Riccati iteration did not converge")]
    RiccatiNotConverged,
    #[error("invalid benchmark parameter: {0}")]
    InvalidParameter(String),
    #[error("problem document: {0}")]
    Document(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub type Result<T> = std::result::Result<T, ModelError>;
