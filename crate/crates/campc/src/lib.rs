//! Online constraint removal for linear MPC: per-step outer sets, index
//! sets of removable state rows, and the receding-horizon controller.

pub mod audit;
pub mod error;
pub mod online;
pub mod removal;
pub mod sets;

pub use audit::{audit_step, vacuous_audit, StepAudit, AUDIT_TOL};
pub use error::{CampcError, Result};
pub use online::{
    warm_start, Controller, OnlineContext, OnlineOptions, SourceSwitch, StepOutcome, Variant,
};
pub use removal::{
    remove_for_step, IndexSets, RemovalReport, RemovalRule, Source, StepCounts, StepIndex,
};
pub use sets::{optimality_ellipsoid, step_sets, OptimalityBall, StepSets, OPTIMALITY_INFLATION};
