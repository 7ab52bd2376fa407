//! Linear time-invariant MPC problems in condensed form: prediction maps,
//! factored quadratic cost, terminal invariant sets and the double-integrator
//! benchmark.

pub mod benchmark;
mod condense;
mod error;
mod problem;
mod system;
mod terminal;

pub use benchmark::build_double_integrator;
pub use condense::{build_prediction, condense_cost};
pub use error::{ModelError, Result};
pub use problem::{MpcProblem, ProblemDocument, DOCUMENT_VERSION};
pub use system::{lqr, CostWeights, LtiSystem, TerminalLaw};
pub use terminal::{build_terminal_set, is_invariant, law_admissible_region};
