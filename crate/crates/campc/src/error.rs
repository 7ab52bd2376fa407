use campc_geometry::GeometryError;
use campc_model::ModelError;
use campc_qp::QpError;
use campc_reach::ReachError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CampcError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Qp(#[from] QpError),
    #[error(transparent)]
    Reach(#[from] ReachError),
    #[error("offline sets were built for problem {found}, not {expected}")]
    OfflineMismatch { expected: String, found: String },
    #[error("approximate mode needs an input increment set and its offline forward fits")]
    MissingDelta,
    #[error("input increment set must contain the origin")]
    DeltaExcludesOrigin,
    #[error("warm start needs a terminal law")]
    NoTerminalLaw,
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("the MPC problem is infeasible at this state")]
    InfeasibleState,
    #[error("QP solver stopped without an optimal point ({0})")]
    SolverFailure(String),
}

pub type Result<T> = std::result::Result<T, CampcError>;
