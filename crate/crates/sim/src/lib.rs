//! Closed-loop simulation of the receding-horizon controllers, trace
//! output and comparison, and the randomized verification suites.

pub mod compare;
pub mod error;
pub mod run;
pub mod verify;

pub use campc::{audit_step, StepAudit};
pub use compare::{compare_traces, TraceComparison};
pub use error::{Result, SimError};
pub use run::{
    parse_variant, simulate, variant_name, AuditTally, ClosedLoopTrace, Halt, RunConfig, StepRecord,
    TraceSummary,
};
pub use verify::{run_suites, SuiteOptions, SuiteReport};
