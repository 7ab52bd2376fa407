use campc_geometry::HPolytope;
use campc_model::MpcProblem;
use nalgebra::{DMatrix, DVector};

use crate::error::{QpError, Result};
use crate::spec::{QpSpec, RowTag};

/// Extra per-step input rows `u_t − ũ_t ∈ δU`.
#[derive(Debug, Clone)]
pub struct InputBand {
    pub nominal: DVector<f64>,
    pub delta: HPolytope,
}

/// QP over `U` with the retained state rows of each step (`retained[i − 1]`
/// lists row indices of `X_i`), every input row, and the optional band.
///
/// State row `c·x_i ≤ b` becomes `c Γ_i U ≤ b − c Φ_i x`. Rows are ordered
/// state (by step, then index), input, band.
pub fn assemble_reduced_qp(
    problem: &MpcProblem,
    x: &DVector<f64>,
    retained: &[Vec<usize>],
    band: Option<&InputBand>,
) -> Result<QpSpec> {
    let horizon = problem.horizon();
    let n = problem.n_states();
    let m = problem.n_inputs();
    let nu = problem.n_decision();
    if retained.len() != horizon {
        return Err(QpError::Dimension {
            what: "retained index lists",
            expected: horizon,
            found: retained.len(),
        });
    }
    if x.len() != n {
        return Err(QpError::Dimension {
            what: "state",
            expected: n,
            found: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(QpError::NonFinite("state"));
    }
    if let Some(b) = band {
        if b.nominal.len() != nu || b.delta.dim() != m {
            return Err(QpError::Dimension {
                what: "input band",
                expected: nu,
                found: b.nominal.len(),
            });
        }
    }
    for (i, rows) in retained.iter().enumerate() {
        let total = problem.state_set(i + 1).n_rows();
        if let Some(&bad) = rows.iter().find(|&&j| j >= total) {
            return Err(QpError::IndexOutOfRange {
                step: i + 1,
                index: bad,
                rows: total,
            });
        }
    }

    let input = problem.input_set();
    let n_state: usize = retained.iter().map(Vec::len).sum();
    let n_input = horizon * input.n_rows();
    let n_band = band.map_or(0, |b| horizon * b.delta.n_rows());
    let total = n_state + n_input + n_band;
    let mut mat = DMatrix::zeros(total, nu);
    let mut rhs = DVector::zeros(total);
    let mut tags = Vec::with_capacity(total);
    let mut r = 0;

    for (i, rows) in retained.iter().enumerate() {
        let step = i + 1;
        let in_u = problem.rows_in_inputs(step);
        let in_x = problem.rows_in_state(step);
        let set = problem.state_set(step);
        for &j in rows {
            mat.row_mut(r).copy_from(&in_u.row(j));
            rhs[r] = set.offset(j) - in_x.row(j).dot(&x.transpose());
            tags.push(RowTag::State { step, row: j });
            r += 1;
        }
    }
    for t in 0..horizon {
        for j in 0..input.n_rows() {
            for k in 0..m {
                mat[(r, t * m + k)] = input.coefficients()[(j, k)];
            }
            rhs[r] = input.offset(j);
            tags.push(RowTag::Input { step: t, row: j });
            r += 1;
        }
    }
    if let Some(b) = band {
        for t in 0..horizon {
            let centre = b.nominal.rows(t * m, m);
            for j in 0..b.delta.n_rows() {
                let g = b.delta.coefficients().row(j);
                for k in 0..m {
                    mat[(r, t * m + k)] = g[k];
                }
                rhs[r] = b.delta.offset(j) + g.dot(&centre.transpose());
                tags.push(RowTag::Band { step: t, row: j });
                r += 1;
            }
        }
    }
    let q0 = problem.unconstrained_minimizer(x);
    QpSpec::new(problem.g().clone(), q0, mat, rhs, tags)
}

/// The original problem: every state row retained.
pub fn assemble_full_qp(
    problem: &MpcProblem,
    x: &DVector<f64>,
    band: Option<&InputBand>,
) -> Result<QpSpec> {
    let all: Vec<Vec<usize>> = problem
        .state_sets()
        .iter()
        .map(|s| (0..s.n_rows()).collect())
        .collect();
    assemble_reduced_qp(problem, x, &all, band)
}
