//! Double-integrator benchmark with many tangent halfplane constraints.

use std::f64::consts::PI;

use campc_geometry::HPolytope;
use nalgebra::{DMatrix, DVector};

use crate::error::{ModelError, Result};
use crate::problem::MpcProblem;
use crate::system::{CostWeights, LtiSystem, TerminalLaw};
use crate::terminal::{build_terminal_set, law_admissible_region};

/// The maximal-invariant-set iteration needs roughly 555 steps here because
/// `A + BK_T` has spectral radius 0.99952.
pub const TERMINAL_MAX_ITERS: usize = 2000;

/// Common center of both ellipses.
pub const ELLIPSE_CENTER: [f64; 2] = [2.15, 0.0];

pub fn double_integrator_system() -> LtiSystem {
    LtiSystem::new(
        DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]),
        DMatrix::from_row_slice(2, 1, &[0.005, 0.1]),
    )
    .expect("constant data is valid")
}

pub fn double_integrator_weights() -> CostWeights {
    CostWeights::new(
        DMatrix::identity(2, 2),
        DMatrix::identity(2, 2),
        DMatrix::identity(1, 1),
    )
    .expect("constant data is valid")
}

pub fn double_integrator_law() -> TerminalLaw {
    TerminalLaw::new(
        DMatrix::from_row_slice(1, 2, &[-0.01, -0.01]),
        &double_integrator_system(),
    )
    .expect("constant data is valid")
}

/// Shape matrices of the two quadratic constraints `(x−d)ᵀP(x−d) ≤ 1`.
pub fn ellipse_shapes() -> [DMatrix<f64>; 2] {
    [
        DMatrix::from_row_slice(2, 2, &[0.14, 0.17, 0.17, 0.97]),
        DMatrix::from_row_slice(2, 2, &[0.20, 0.05, 0.05, 0.21]),
    ]
}

/// Tangency points `v_j = d + P^{-1/2}(cos θ_j, sin θ_j)`, `θ_j = 2πj/n_v`.
pub fn tangency_points(shape: &DMatrix<f64>, n_v: usize) -> Vec<DVector<f64>> {
    let eig = shape.clone().symmetric_eigen();
    let inv_sqrt = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
        * eig.eigenvectors.transpose();
    let d = DVector::from_column_slice(&ELLIPSE_CENTER);
    (0..n_v)
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / n_v as f64;
            &d + &inv_sqrt * DVector::from_vec(vec![theta.cos(), theta.sin()])
        })
        .collect()
}

/// Halfplanes `(v−d)ᵀP(x−d) ≤ 1` tangent to one ellipse at its `n_v` points.
pub fn ellipse_polygon(shape: &DMatrix<f64>, n_v: usize) -> Result<HPolytope> {
    let d = DVector::from_column_slice(&ELLIPSE_CENTER);
    let mut rows = Vec::with_capacity(n_v);
    let mut offsets = Vec::with_capacity(n_v);
    for v in tangency_points(shape, n_v) {
        let c = shape * (&v - &d);
        offsets.push(1.0 + c.dot(&d));
        rows.push(c.iter().copied().collect::<Vec<_>>());
    }
    Ok(HPolytope::from_rows(2, &rows, &offsets)?)
}

/// `X_i` for `i < N`: both tangent polygons stacked, `2·n_v` rows, unpruned.
pub fn double_integrator_state_set(n_v: usize) -> Result<HPolytope> {
    if n_v < 3 {
        return Err(ModelError::InvalidParameter(format!(
            "need at least 3 tangency points per ellipse, got {n_v}"
        )));
    }
    let [p1, p2] = ellipse_shapes();
    Ok(ellipse_polygon(&p1, n_v)?.intersect(&ellipse_polygon(&p2, n_v)?)?)
}

pub fn double_integrator_input_set() -> HPolytope {
    HPolytope::symmetric_box(1, 1.0).expect("constant data is valid")
}

pub fn build_double_integrator(n_v: usize, horizon: usize) -> Result<MpcProblem> {
    if horizon == 0 {
        return Err(ModelError::InvalidHorizon);
    }
    let sys = double_integrator_system();
    let law = double_integrator_law();
    let input = double_integrator_input_set();
    let x1 = double_integrator_state_set(n_v)?;
    let start = x1.intersect(&law_admissible_region(&law, &input)?)?;
    let terminal = build_terminal_set(&sys, &law, &start, TERMINAL_MAX_ITERS)?;
    let mut sets = vec![x1; horizon - 1];
    sets.push(terminal);
    MpcProblem::new(sys, horizon, sets, input, double_integrator_weights(), Some(law))
}
