//! Dense LP solver for `max cᵀx s.t. Cx ≤ b`.
//!
//! The problems that show up here have few columns (state or input-sequence
//! dimension) and possibly thousands of rows, so the solver works directly in
//! inequality form: a working set of at most `n` linearly independent active
//! rows is moved from vertex to vertex. Each iteration costs one pass over the
//! rows (ratio test) plus a tiny QR of the working set.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeometryError, Result};
use crate::polytope::HPolytope;

/// Primal feasibility tolerance on unit-normalized rows.
pub const FEAS_TOL: f64 = 1e-9;
/// Rows with a smaller norm are treated as `0 ≤ b`.
pub const ZERO_ROW: f64 = 1e-12;

const DIR_TOL: f64 = 1e-11;
const DUAL_TOL: f64 = 1e-10;
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    /// Optimal point, last iterate, or (for `Infeasible`) the least-violating
    /// point found by phase 1.
    pub x_opt: DVector<f64>,
    pub value: f64,
    /// Working-set rows at termination. For `Infeasible` these are the rows
    /// of an infeasible subsystem (Farkas certificate support).
    pub active: Vec<usize>,
    pub iterations: usize,
}

/// Maximizes `costᵀx` over `poly`.
pub fn lp_solve(cost: &DVector<f64>, poly: &HPolytope) -> Result<LpResult> {
    check_cost(cost, poly)?;
    let rows = RowSet::new(poly.coefficients(), poly.offsets());
    let idx: Vec<usize> = (0..rows.len()).collect();
    let start = match rows.find_feasible(&idx) {
        Feasibility::Feasible(x, iters) => (x, iters),
        Feasibility::Infeasible(x, certificate, iters) => {
            let value = cost.dot(&x);
            return Ok(LpResult {
                status: LpStatus::Infeasible,
                x_opt: x,
                value,
                active: certificate,
                iterations: iters,
            });
        }
    };
    let (x0, phase1_iters) = start;
    let mut res = rows.maximize(&idx, cost, x0);
    res.iterations += phase1_iters;
    Ok(res)
}

/// Maximizes `costᵀx` over `poly` starting from a point known to be feasible.
pub fn lp_solve_from(
    cost: &DVector<f64>,
    poly: &HPolytope,
    start: &DVector<f64>,
) -> Result<LpResult> {
    check_cost(cost, poly)?;
    if start.len() != poly.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: poly.dim(),
            found: start.len(),
        });
    }
    let rows = RowSet::new(poly.coefficients(), poly.offsets());
    let idx: Vec<usize> = (0..rows.len()).collect();
    if rows.max_violation(&idx, start) > FEAS_TOL {
        return Err(GeometryError::Numerical(
            "start point violates the constraints".into(),
        ));
    }
    Ok(rows.maximize(&idx, cost, start.clone()))
}

fn check_cost(cost: &DVector<f64>, poly: &HPolytope) -> Result<()> {
    if cost.len() != poly.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: poly.dim(),
            found: cost.len(),
        });
    }
    if cost.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::NonFinite("cost vector"));
    }
    Ok(())
}

pub(crate) enum Feasibility {
    Feasible(DVector<f64>, usize),
    Infeasible(DVector<f64>, Vec<usize>, usize),
}

/// Unit-normalized copy of a row set, stored column-per-row for contiguous
/// dot products.
#[derive(Debug, Clone)]
pub(crate) struct RowSet {
    at: DMatrix<f64>,
    b: Vec<f64>,
    zero: Vec<bool>,
}

impl RowSet {
    pub(crate) fn new(c: &DMatrix<f64>, b: &DVector<f64>) -> Self {
        let n = c.ncols();
        let m = c.nrows();
        let mut at = DMatrix::zeros(n, m);
        let mut bn = vec![0.0; m];
        let mut zero = vec![false; m];
        for i in 0..m {
            let norm = c.row(i).norm();
            if norm < ZERO_ROW {
                zero[i] = true;
                bn[i] = b[i];
                continue;
            }
            for k in 0..n {
                at[(k, i)] = c[(i, k)] / norm;
            }
            bn[i] = b[i] / norm;
        }
        RowSet { at, b: bn, zero }
    }

    pub(crate) fn len(&self) -> usize {
        self.b.len()
    }

    pub(crate) fn dim(&self) -> usize {
        self.at.nrows()
    }

    pub(crate) fn is_zero(&self, i: usize) -> bool {
        self.zero[i]
    }

    pub(crate) fn normal(&self, i: usize) -> nalgebra::DVectorView<'_, f64> {
        self.at.column(i)
    }

    pub(crate) fn offset(&self, i: usize) -> f64 {
        self.b[i]
    }

    #[inline]
    pub(crate) fn dot(&self, i: usize, x: &DVector<f64>) -> f64 {
        self.at.column(i).dot(x)
    }

    pub(crate) fn max_violation(&self, idx: &[usize], x: &DVector<f64>) -> f64 {
        idx.iter()
            .map(|&i| {
                if self.zero[i] {
                    -self.b[i]
                } else {
                    self.dot(i, x) - self.b[i]
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Phase 1 over the rows in `idx`.
    pub(crate) fn find_feasible(&self, idx: &[usize]) -> Feasibility {
        let n = self.dim();
        for &i in idx {
            if self.zero[i] && self.b[i] < -FEAS_TOL {
                return Feasibility::Infeasible(DVector::zeros(n), vec![i], 0);
            }
        }
        let live: Vec<usize> = idx.iter().copied().filter(|&i| !self.zero[i]).collect();
        let t0 = live.iter().map(|&i| -self.b[i]).fold(0.0, f64::max);
        if t0 <= 0.0 {
            return Feasibility::Feasible(DVector::zeros(n), 0);
        }
        // Variables (x, t); rows (a x - t)/√2 ≤ b/√2 and -t ≤ 1.
        let k = live.len();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut at = DMatrix::zeros(n + 1, k + 1);
        let mut b = vec![0.0; k + 1];
        for (col, &i) in live.iter().enumerate() {
            for r in 0..n {
                at[(r, col)] = self.at[(r, i)] * s;
            }
            at[(n, col)] = -s;
            b[col] = self.b[i] * s;
        }
        at[(n, k)] = -1.0;
        b[k] = 1.0;
        let lifted = RowSet {
            at,
            b,
            zero: vec![false; k + 1],
        };
        let all: Vec<usize> = (0..=k).collect();
        let mut cost = DVector::zeros(n + 1);
        cost[n] = -1.0;
        let mut x0 = DVector::zeros(n + 1);
        x0[n] = t0;
        let asc = lifted.ascend(&all, &cost, x0);
        let x = asc.x.rows(0, n).into_owned();
        let t = asc.x[n];
        if t > FEAS_TOL {
            let mut cert: Vec<usize> = asc
                .working
                .iter()
                .zip(asc.multipliers.iter())
                .filter(|&(&w, &mu)| w < k && mu > DUAL_TOL)
                .map(|(&w, _)| live[w])
                .collect();
            if cert.is_empty() {
                cert = asc.working.iter().filter(|&&w| w < k).map(|&w| live[w]).collect();
            }
            cert.sort_unstable();
            Feasibility::Infeasible(x, cert, asc.iterations)
        } else {
            Feasibility::Feasible(x, asc.iterations)
        }
    }

    /// Phase 2 from a feasible start; rows in `idx` only.
    pub(crate) fn maximize(&self, idx: &[usize], cost: &DVector<f64>, x0: DVector<f64>) -> LpResult {
        let cn = cost.norm();
        if cn == 0.0 {
            return LpResult {
                status: LpStatus::Optimal,
                value: 0.0,
                x_opt: x0,
                active: Vec::new(),
                iterations: 0,
            };
        }
        let live: Vec<usize> = idx.iter().copied().filter(|&i| !self.zero[i]).collect();
        let unit = cost / cn;
        let asc = self.ascend(&live, &unit, x0);
        let value = cost.dot(&asc.x);
        let mut active = asc.working;
        active.sort_unstable();
        LpResult {
            status: asc.status,
            x_opt: asc.x,
            value,
            active,
            iterations: asc.iterations,
        }
    }

    fn ascend(&self, idx: &[usize], cost: &DVector<f64>, mut x: DVector<f64>) -> Ascent {
        let n = self.dim();
        let max_iter = 50 * (idx.len() + n) + 1000;
        let mut working: Vec<usize> = Vec::with_capacity(n);
        let mut in_working = vec![false; self.len()];
        let mut degenerate_run = 0usize;
        for iter in 0..max_iter {
            let (dir, mult) = self.project(&working, cost);
            let dn = dir.norm();
            if dn > DIR_TOL {
                let dh = dir / dn;
                let mut best: Option<(usize, f64)> = None;
                for &i in idx {
                    if in_working[i] {
                        continue;
                    }
                    let ad = self.dot(i, &dh);
                    if ad <= DIR_TOL {
                        continue;
                    }
                    let slack = (self.b[i] - self.dot(i, &x)).max(0.0);
                    let t = slack / ad;
                    best = match best {
                        None => Some((i, t)),
                        Some((bi, bt)) => {
                            if t < bt - TIE_TOL || (t <= bt + TIE_TOL && i < bi) {
                                Some((i, t))
                            } else {
                                Some((bi, bt))
                            }
                        }
                    };
                }
                match best {
                    None => {
                        return Ascent {
                            status: LpStatus::Unbounded,
                            x,
                            multipliers: vec![0.0; working.len()],
                            working,
                            iterations: iter,
                        }
                    }
                    Some((i, t)) => {
                        if t == 0.0 {
                            degenerate_run += 1;
                        } else {
                            degenerate_run = 0;
                        }
                        x.axpy(t, &dh, 1.0);
                        working.push(i);
                        in_working[i] = true;
                    }
                }
            } else {
                let mult = mult.expect("multipliers computed when direction vanishes");
                // Dantzig rule normally, Bland's smallest index once stalling.
                let bland = degenerate_run > n + 5;
                let mut leave: Option<usize> = None;
                for (pos, &mu) in mult.iter().enumerate() {
                    if mu >= -DUAL_TOL {
                        continue;
                    }
                    leave = match leave {
                        None => Some(pos),
                        Some(p) => {
                            let better = if bland {
                                working[pos] < working[p]
                            } else {
                                mu < mult[p]
                            };
                            if better {
                                Some(pos)
                            } else {
                                Some(p)
                            }
                        }
                    };
                }
                match leave {
                    None => {
                        return Ascent {
                            status: LpStatus::Optimal,
                            x,
                            working,
                            multipliers: mult.iter().copied().collect(),
                            iterations: iter,
                        }
                    }
                    Some(pos) => {
                        let row = working.remove(pos);
                        in_working[row] = false;
                    }
                }
            }
        }
        Ascent {
            status: LpStatus::IterationLimit,
            x,
            multipliers: vec![0.0; working.len()],
            working,
            iterations: max_iter,
        }
    }

    /// Projection of `cost` onto the null space of the working rows, and the
    /// least-squares multipliers when that projection vanishes.
    fn project(&self, working: &[usize], cost: &DVector<f64>) -> (DVector<f64>, Option<DVector<f64>>) {
        if working.is_empty() {
            return (cost.clone(), Some(DVector::zeros(0)));
        }
        let n = self.dim();
        let k = working.len();
        let mut aw = DMatrix::zeros(n, k);
        for (col, &i) in working.iter().enumerate() {
            aw.set_column(col, &self.at.column(i));
        }
        let qr = aw.qr();
        let q = qr.q();
        let r = qr.r();
        let qtc = q.transpose() * cost;
        let dir = cost - &q * &qtc;
        if dir.norm() > DIR_TOL {
            return (dir, None);
        }
        let mult = r
            .solve_upper_triangular(&qtc)
            .unwrap_or_else(|| DVector::zeros(k));
        (dir, Some(mult))
    }
}

struct Ascent {
    status: LpStatus,
    x: DVector<f64>,
    working: Vec<usize>,
    multipliers: Vec<f64>,
    iterations: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(rows: &[&[f64]], b: &[f64]) -> HPolytope {
        let n = rows[0].len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        HPolytope::new(
            DMatrix::from_row_slice(rows.len(), n, &flat),
            DVector::from_column_slice(b),
        )
        .unwrap()
    }

    fn unit_box() -> HPolytope {
        poly(
            &[&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0], &[0.0, -1.0]],
            &[1.0, 1.0, 1.0, 1.0],
        )
    }

    #[test]
    fn box_support() {
        let r = lp_solve(&DVector::from_vec(vec![1.0, 0.0]), &unit_box()).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!((r.x_opt[0] - 1.0).abs() < 1e-12);
        assert!(r.x_opt[1].abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let p = poly(&[&[1.0], &[-1.0]], &[1.0, -2.0]);
        let r = lp_solve(&DVector::from_vec(vec![1.0]), &p).unwrap();
        assert_eq!(r.status, LpStatus::Infeasible);
        assert_eq!(r.active, vec![0, 1]);
    }

    #[test]
    fn diamond() {
        let p = poly(
            &[&[1.0, 1.0], &[1.0, -1.0], &[-1.0, 1.0], &[-1.0, -1.0]],
            &[1.0; 4],
        );
        let r = lp_solve(&DVector::from_vec(vec![1.0, 1.0]), &p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn half_plane_is_unbounded() {
        let p = poly(&[&[1.0, 0.0]], &[1.0]);
        let r = lp_solve(&DVector::from_vec(vec![0.0, 1.0]), &p).unwrap();
        assert_eq!(r.status, LpStatus::Unbounded);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(lp_solve(&DVector::from_vec(vec![1.0]), &unit_box()).is_err());
    }

    #[test]
    fn infeasible_start_from_far_offsets() {
        // Feasible set is a tiny box far from the origin.
        let p = poly(
            &[&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0], &[0.0, -1.0]],
            &[101.0, -100.0, 51.0, -50.0],
        );
        let r = lp_solve(&DVector::from_vec(vec![-1.0, -1.0]), &p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.value + 150.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // Many rows through the same vertex (1, 1).
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut b = Vec::new();
        for k in 0..20 {
            let a = 0.05 + 0.9 * k as f64 / 19.0;
            rows.push(vec![a, 1.0 - a]);
            b.push(1.0);
        }
        rows.push(vec![-1.0, 0.0]);
        b.push(0.0);
        rows.push(vec![0.0, -1.0]);
        b.push(0.0);
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let p = poly(&refs, &b);
        let r = lp_solve(&DVector::from_vec(vec![1.0, 1.0]), &p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.value - 2.0).abs() < 1e-9);
    }
}
