use serde::Serialize;

use crate::error::{Result, SimError};
use crate::run::ClosedLoopTrace;

/// Per-step and worst-case deviations between two equally long traces.
#[derive(Debug, Clone, Serialize)]
pub struct TraceComparison {
    /// `‖x_k^a − x_k^b‖∞`.
    pub state_deviation: Vec<f64>,
    pub input_deviation: Vec<f64>,
    /// `|J_k^a − J_k^b| / (1 + |J_k^b|)`.
    pub cost_deviation: Vec<f64>,
    pub max_state_deviation: f64,
    pub max_input_deviation: f64,
    pub max_cost_deviation: f64,
    pub tolerance: f64,
    /// States and inputs agree to `tolerance` at every step.
    pub equal: bool,
}

fn inf_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn compare_traces(a: &ClosedLoopTrace, b: &ClosedLoopTrace, tol: f64) -> Result<TraceComparison> {
    if a.len() != b.len() {
        return Err(SimError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let pairs = a.records.iter().zip(&b.records);
    let state_deviation: Vec<f64> = pairs.clone().map(|(p, q)| inf_norm(&p.x, &q.x)).collect();
    let input_deviation: Vec<f64> = pairs.clone().map(|(p, q)| inf_norm(&p.u, &q.u)).collect();
    let cost_deviation: Vec<f64> = pairs.map(|(p, q)| (p.cost - q.cost).abs() / (1.0 + q.cost.abs())).collect();
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let max_state_deviation = max(&state_deviation).max(inf_norm(
        a.final_state.as_slice(),
        b.final_state.as_slice(),
    ));
    let max_input_deviation = max(&input_deviation);
    Ok(TraceComparison {
        max_cost_deviation: max(&cost_deviation),
        equal: max_state_deviation <= tol && max_input_deviation <= tol,
        state_deviation,
        input_deviation,
        cost_deviation,
        max_state_deviation,
        max_input_deviation,
        tolerance: tol,
    })
}
