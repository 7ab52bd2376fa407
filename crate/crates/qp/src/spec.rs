use std::collections::HashSet;
use std::time::Duration;

use nalgebra::{DMatrix, DVector};

use crate::error::{QpError, Result};

/// Where a QP row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowTag {
    /// Row `row` of the state set at prediction step `step` (1-based).
    State { step: usize, row: usize },
    /// Row `row` of the input set applied to input `step` (0-based).
    Input { step: usize, row: usize },
    /// Row `row` of the band `u_step − ũ_step ∈ δU`.
    Band { step: usize, row: usize },
}

/// `min ‖G(U − q0)‖²  s.t.  M·U ≤ d`.
#[derive(Debug, Clone)]
pub struct QpSpec {
    g: DMatrix<f64>,
    q0: DVector<f64>,
    m: DMatrix<f64>,
    d: DVector<f64>,
    tags: Vec<RowTag>,
}

impl QpSpec {
    pub fn new(
        g: DMatrix<f64>,
        q0: DVector<f64>,
        m: DMatrix<f64>,
        d: DVector<f64>,
        tags: Vec<RowTag>,
    ) -> Result<Self> {
        let n = g.nrows();
        if n == 0 || g.ncols() != n {
            return Err(QpError::Dimension {
                what: "cost factor must be square",
                expected: n,
                found: g.ncols(),
            });
        }
        if q0.len() != n {
            return Err(QpError::Dimension {
                what: "q0",
                expected: n,
                found: q0.len(),
            });
        }
        if m.ncols() != n {
            return Err(QpError::Dimension {
                what: "constraint columns",
                expected: n,
                found: m.ncols(),
            });
        }
        if d.len() != m.nrows() || tags.len() != m.nrows() {
            return Err(QpError::Dimension {
                what: "constraint rows",
                expected: m.nrows(),
                found: d.len().min(tags.len()),
            });
        }
        if g.iter().chain(q0.iter()).any(|v| !v.is_finite()) {
            return Err(QpError::NonFinite("objective"));
        }
        if m.iter().chain(d.iter()).any(|v| !v.is_finite()) {
            return Err(QpError::NonFinite("constraints"));
        }
        let mut seen = HashSet::with_capacity(tags.len());
        for t in &tags {
            if !seen.insert(*t) {
                return Err(QpError::DuplicateTag(*t));
            }
        }
        if !g.clone().lu().is_invertible() {
            return Err(QpError::SingularFactor);
        }
        Ok(QpSpec { g, q0, m, d, tags })
    }

    pub fn n_vars(&self) -> usize {
        self.g.nrows()
    }

    pub fn n_rows(&self) -> usize {
        self.m.nrows()
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn q0(&self) -> &DVector<f64> {
        &self.q0
    }

    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn d(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn tags(&self) -> &[RowTag] {
        &self.tags
    }

    pub fn tag(&self, row: usize) -> RowTag {
        self.tags[row]
    }

    /// `‖G(U − q0)‖²`.
    pub fn cost(&self, u: &DVector<f64>) -> f64 {
        (&self.g * (u - &self.q0)).norm_squared()
    }

    /// `2GᵀG(U − q0)`.
    pub fn gradient(&self, u: &DVector<f64>) -> DVector<f64> {
        self.g.tr_mul(&(&self.g * (u - &self.q0))) * 2.0
    }

    /// Largest entry of `M·U − d` (negative when strictly feasible).
    pub fn max_violation(&self, u: &DVector<f64>) -> f64 {
        if self.n_rows() == 0 {
            return f64::NEG_INFINITY;
        }
        (&self.m * u - &self.d).max()
    }

    /// Same objective with only the rows in `keep`.
    pub fn select_rows(&self, keep: &[usize]) -> QpSpec {
        QpSpec {
            g: self.g.clone(),
            q0: self.q0.clone(),
            m: self.m.select_rows(keep),
            d: self.d.select_rows(keep),
            tags: keep.iter().map(|&i| self.tags[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub status: QpStatus,
    /// Minimizer, or the last iterate.
    pub u: DVector<f64>,
    /// Rows in the final working set, ascending.
    pub active: Vec<usize>,
    /// One multiplier per row, zero off the working set.
    pub multipliers: DVector<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub solve_time: Duration,
    /// Rows of an infeasible subsystem when `status` is `Infeasible`.
    pub certificate: Vec<usize>,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }
}
