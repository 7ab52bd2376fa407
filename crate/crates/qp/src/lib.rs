//! Strictly convex dense QP `min ‖G(U − q0)‖² s.t. MU ≤ d` with row
//! provenance, an active-set solver, and an independent KKT check.

mod assemble;
mod error;
mod kkt;
mod solver;
mod spec;

pub use assemble::{assemble_full_qp, assemble_reduced_qp, InputBand};
pub use error::{QpError, Result};
pub use kkt::{kkt_residuals, kkt_verify, KktResiduals};
pub use solver::{solve_qp, PRIMAL_TOL};
pub use spec::{QpSolution, QpSpec, QpStatus, RowTag};
