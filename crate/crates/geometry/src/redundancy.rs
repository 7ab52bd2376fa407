//! Redundant-row removal.
//!
//! Rows strictly slack over the bounding box are dropped first, then
//! Clarkson's ray-shooting scheme builds the facet set with LPs whose size is
//! the number of facets found so far, not the number of input rows.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeometryError, Result};
use crate::lp::{Feasibility, LpStatus, RowSet, FEAS_TOL, ZERO_ROW};
use crate::polytope::HPolytope;

/// A row is redundant when its LP maximum over the remaining rows exceeds
/// its offset by at most this much (unit-normalized rows).
pub const REDUNDANCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Pruned {
    /// Non-redundant rows, or an infeasible subsystem when `feasible` is false.
    pub polytope: HPolytope,
    /// Indices of the surviving rows in the input polytope, ascending.
    pub kept: Vec<usize>,
    pub feasible: bool,
}

impl HPolytope {
    /// Same set with every redundant row removed. Infeasible input yields an
    /// infeasible subsystem of the input rows.
    pub fn remove_redundant_rows(&self) -> HPolytope {
        self.prune().polytope
    }

    pub fn prune(&self) -> Pruned {
        let rows = RowSet::new(self.coefficients(), self.offsets());
        let all: Vec<usize> = (0..rows.len()).collect();
        let x_feas = match rows.find_feasible(&all) {
            Feasibility::Feasible(x, _) => x,
            Feasibility::Infeasible(_, cert, _) => {
                return Pruned {
                    polytope: self.select_rows(&cert),
                    kept: cert,
                    feasible: false,
                }
            }
        };
        let live: Vec<usize> = all.iter().copied().filter(|&i| !rows.is_zero(i)).collect();
        let kept = match interior_point(&rows, &live) {
            Some(z) => clarkson(&rows, &live, &z),
            None => sequential(&rows, &live, &x_feas),
        };
        Pruned {
            polytope: self.select_rows(&kept),
            kept,
            feasible: true,
        }
    }
}

impl HPolytope {
    /// For each row `(c, d)` of `candidates`, whether `c·x ≤ d` holds on all
    /// of `self` (to `REDUNDANCY_TOL` on unit-normalized rows). An empty
    /// `self` implies everything.
    pub fn implied_rows(&self, candidates: &HPolytope) -> Result<Vec<bool>> {
        if candidates.dim() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                found: candidates.dim(),
            });
        }
        let rows = RowSet::new(self.coefficients(), self.offsets());
        let all: Vec<usize> = (0..rows.len()).collect();
        let x_feas = match rows.find_feasible(&all) {
            Feasibility::Feasible(x, _) => x,
            Feasibility::Infeasible(..) => return Ok(vec![true; candidates.n_rows()]),
        };
        let live: Vec<usize> = all.iter().copied().filter(|&i| !rows.is_zero(i)).collect();
        let z = interior_point(&rows, &live).unwrap_or(x_feas);
        let bbox = bounding_box(&rows, &live, &z);
        let n = self.dim();
        let mut out = Vec::with_capacity(candidates.n_rows());
        for j in 0..candidates.n_rows() {
            let c = candidates.row(j);
            let norm = c.norm();
            if norm < ZERO_ROW {
                out.push(candidates.offset(j) >= -FEAS_TOL);
                continue;
            }
            let a = c / norm;
            let bj = candidates.offset(j) / norm;
            if let Some((lo, hi)) = &bbox {
                let support: f64 = (0..n).map(|k| (a[k] * lo[k]).max(a[k] * hi[k])).sum();
                if support <= bj + REDUNDANCY_TOL {
                    out.push(true);
                    continue;
                }
            }
            let r = rows.maximize(&live, &a, z.clone());
            out.push(r.status == LpStatus::Optimal && r.value <= bj + REDUNDANCY_TOL);
        }
        Ok(out)
    }
}

/// Chebyshev center with radius capped so the LP stays bounded; `None` if the
/// set has no interior.
fn interior_point(rows: &RowSet, live: &[usize]) -> Option<DVector<f64>> {
    let n = rows.dim();
    if live.is_empty() {
        return Some(DVector::zeros(n));
    }
    let cap = 1.0 + live.iter().map(|&i| rows.offset(i).abs()).fold(0.0, f64::max);
    let m = live.len();
    let mut c = DMatrix::zeros(m + 1, n + 1);
    let mut b = DVector::zeros(m + 1);
    for (r, &i) in live.iter().enumerate() {
        let a = rows.normal(i);
        for k in 0..n {
            c[(r, k)] = a[k];
        }
        c[(r, n)] = 1.0;
        b[r] = rows.offset(i);
    }
    c[(m, n)] = 1.0;
    b[m] = cap;
    let lifted = RowSet::new(&c, &b);
    let idx: Vec<usize> = (0..=m).collect();
    let start = match lifted.find_feasible(&idx) {
        Feasibility::Feasible(x, _) => x,
        Feasibility::Infeasible(..) => return None,
    };
    let mut cost = DVector::zeros(n + 1);
    cost[n] = 1.0;
    let r = lifted.maximize(&idx, &cost, start);
    if r.status != LpStatus::Optimal || r.x_opt[n] <= 10.0 * REDUNDANCY_TOL {
        return None;
    }
    Some(r.x_opt.rows(0, n).into_owned())
}

/// `max a_j x` over rows `set` exceeds `b_j` by more than the tolerance.
fn escapes(rows: &RowSet, set: &[usize], j: usize, start: &DVector<f64>) -> (bool, Option<DVector<f64>>) {
    let cost = rows.normal(j).into_owned();
    // Start where the ray along the cost leaves the set: on rounded sets this
    // is next to the optimum and keeps the vertex walk short.
    let mut reach = f64::INFINITY;
    for &i in set {
        let rate = rows.normal(i).dot(&cost);
        if rate > 0.0 {
            reach = reach.min((rows.offset(i) - rows.dot(i, start)).max(0.0) / rate);
        }
    }
    let x0 = if reach.is_finite() {
        start + &cost * (reach * (1.0 - 1e-12))
    } else {
        start.clone()
    };
    let r = rows.maximize(set, &cost, x0);
    match r.status {
        LpStatus::Optimal => (r.value > rows.offset(j) + REDUNDANCY_TOL, Some(r.x_opt)),
        LpStatus::Unbounded => (true, None),
        // Be conservative: a row we could not certify redundant stays.
        LpStatus::Infeasible | LpStatus::IterationLimit => (true, None),
    }
}

fn sequential(rows: &RowSet, live: &[usize], start: &DVector<f64>) -> Vec<usize> {
    let mut kept: Vec<usize> = live.to_vec();
    let mut pos = 0;
    while pos < kept.len() {
        let j = kept[pos];
        let others: Vec<usize> = kept.iter().copied().filter(|&i| i != j).collect();
        let (esc, _) = escapes(rows, &others, j, start);
        if esc {
            pos += 1;
        } else {
            kept.remove(pos);
        }
    }
    kept
}

fn clarkson(rows: &RowSet, live: &[usize], z: &DVector<f64>) -> Vec<usize> {
    let n = rows.dim();
    let mut candidates: Vec<usize> = live.to_vec();

    // Bounding-box prefilter: rows strictly slack over a superset are slack
    // over the set itself.
    if let Some((lo, hi)) = bounding_box(rows, live, z) {
        candidates.retain(|&i| {
            let a = rows.normal(i);
            let support: f64 = (0..n).map(|k| (a[k] * lo[k]).max(a[k] * hi[k])).sum();
            support >= rows.offset(i) - REDUNDANCY_TOL
        });
    }

    let mut in_facets = vec![false; rows.len()];
    let mut discarded = vec![false; rows.len()];
    let mut facets: Vec<usize> = Vec::new();
    let mut k = 0;
    while k < candidates.len() {
        let j = candidates[k];
        if in_facets[j] {
            k += 1;
            continue;
        }
        let (esc, x_star) = escapes(rows, &facets, j, z);
        if !esc {
            discarded[j] = true;
            k += 1;
            continue;
        }
        let dir = match x_star {
            Some(x) if (&x - z).norm() > 0.0 => x - z,
            _ => rows.normal(j).into_owned(),
        };
        let mut hit: Option<(usize, f64)> = None;
        for &i in &candidates {
            if in_facets[i] || discarded[i] {
                continue;
            }
            let ad = rows.normal(i).dot(&dir);
            if ad <= 0.0 {
                continue;
            }
            let s = (rows.offset(i) - rows.dot(i, z)) / ad;
            hit = match hit {
                None => Some((i, s)),
                Some((bi, bs)) => {
                    if s < bs - 1e-14 * bs.abs().max(1.0) || (s <= bs + 1e-14 * bs.abs().max(1.0) && i < bi) {
                        Some((i, s))
                    } else {
                        Some((bi, bs))
                    }
                }
            };
        }
        let first = hit.map(|(i, _)| i).unwrap_or(j);
        in_facets[first] = true;
        facets.push(first);
        if first == j {
            k += 1;
        }
    }

    // Cleanup within the facet set (ties in ray shooting can admit a
    // redundant row).
    facets.sort_unstable();
    let mut pos = 0;
    while pos < facets.len() {
        let j = facets[pos];
        let others: Vec<usize> = facets.iter().copied().filter(|&i| i != j).collect();
        let (esc, _) = escapes(rows, &others, j, z);
        if esc {
            pos += 1;
        } else {
            facets.remove(pos);
        }
    }
    facets
}

fn bounding_box(rows: &RowSet, live: &[usize], z: &DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
    let n = rows.dim();
    let mut lo = DVector::zeros(n);
    let mut hi = DVector::zeros(n);
    for k in 0..n {
        for sign in [1.0, -1.0] {
            let mut cost = DVector::zeros(n);
            cost[k] = sign;
            let r = rows.maximize(live, &cost, z.clone());
            if r.status != LpStatus::Optimal {
                return None;
            }
            // Pad by the feasibility tolerance so the box is a true superset.
            if sign > 0.0 {
                hi[k] = r.value + FEAS_TOL;
            } else {
                lo[k] = -r.value - FEAS_TOL;
            }
        }
    }
    Some((lo, hi))
}
