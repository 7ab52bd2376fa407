//! Positively invariant terminal sets by the maximal-invariant-set iteration
//! `X ← X ∩ {x : (A + BK)x ∈ X}`.

use campc_geometry::{lp_solve_from, HPolytope, LpStatus, REDUNDANCY_TOL};
use nalgebra::{DMatrix, DVector};

use crate::error::{ModelError, Result};
use crate::system::{LtiSystem, TerminalLaw};

/// Largest subset of `x0` that is invariant under `u = K_T x`, pruned.
/// Fails if the iteration neither converges within `max_iters` nor its last
/// iterate passes the invariance certificate.
pub fn build_terminal_set(
    sys: &LtiSystem,
    law: &TerminalLaw,
    x0: &HPolytope,
    max_iters: usize,
) -> Result<HPolytope> {
    let closed = sys.closed_loop(law);
    let start = x0.prune();
    if !start.feasible {
        return Err(ModelError::EmptyTerminalSet);
    }
    let mut facets = FacetSet::new(&start.polytope)?;
    // Preimages of older facets are already implied by the current set, so
    // each round only tests preimages of the facets added in the last round.
    let mut frontier: Vec<usize> = (0..facets.len()).collect();
    for _ in 0..max_iters {
        let current = facets.polytope()?;
        let mut cuts = Vec::new();
        let mut hint: Option<DVector<f64>> = None;
        for &f in &frontier {
            let (c, b) = facets.row(f);
            let c = closed.tr_mul(c);
            // Successive cuts are close to each other, so starting near the
            // last optimum keeps the vertex walk short.
            let from = match &hint {
                Some(h) => pull_inside(&current, &facets.anchor, h),
                None => facets.anchor.clone(),
            };
            let r = lp_solve_from(&c, &current, &from)?;
            if r.status != LpStatus::Optimal || r.value > b + REDUNDANCY_TOL * c.norm() {
                cuts.push((c, b));
            }
            hint = Some(r.x_opt);
        }
        if cuts.is_empty() {
            break;
        }
        frontier = facets.add(cuts)?;
    }
    let set = facets.polytope()?.prune().polytope;
    if is_invariant(sys, law, &set)? {
        Ok(set)
    } else {
        Err(ModelError::TerminalNotConverged(max_iters))
    }
}

/// Irredundant row list where each row keeps a witness point on its facet
/// that strictly satisfies every other row. Adding cuts only re-examines rows
/// whose witness a cut violates.
struct FacetSet {
    rows: Vec<(DVector<f64>, f64)>,
    witness: Vec<Option<DVector<f64>>>,
    /// Strictly interior point.
    anchor: DVector<f64>,
}

impl FacetSet {
    fn new(poly: &HPolytope) -> Result<Self> {
        let rows = (0..poly.n_rows()).map(|j| (poly.row(j), poly.offset(j))).collect::<Vec<_>>();
        let anchor = poly.chebyshev_ball()?.0;
        let mut set = FacetSet {
            witness: vec![None; rows.len()],
            rows,
            anchor,
        };
        let all: Vec<usize> = (0..set.len()).collect();
        set.refresh(&all)?;
        Ok(set)
    }

    fn len(&self) -> usize {
        self.rows.len()
    }

    fn row(&self, j: usize) -> (&DVector<f64>, f64) {
        (&self.rows[j].0, self.rows[j].1)
    }

    fn polytope(&self) -> Result<HPolytope> {
        polytope_of(self.rows.iter().map(|(c, b)| (c, *b)), self.anchor.len())
    }

    /// Appends cuts, drops rows that became redundant and returns the
    /// indices of the surviving cuts.
    fn add(&mut self, cuts: Vec<(DVector<f64>, f64)>) -> Result<Vec<usize>> {
        let first_new = self.len();
        let mut suspects: Vec<usize> = (0..first_new)
            .filter(|&j| match &self.witness[j] {
                None => true,
                Some(w) => cuts
                    .iter()
                    .any(|(c, b)| c.dot(w) >= b - REDUNDANCY_TOL * c.norm()),
            })
            .collect();
        for cut in cuts {
            self.rows.push(cut);
            self.witness.push(None);
        }
        if self.rows.iter().any(|(c, b)| c.dot(&self.anchor) >= *b) {
            self.anchor = self.polytope()?.chebyshev_ball()?.0;
        }
        suspects.extend(first_new..self.len());
        let kept = self.refresh(&suspects)?;
        Ok(kept
            .into_iter()
            .filter(|&(old, _)| old >= first_new)
            .map(|(_, new)| new)
            .collect())
    }

    /// Recomputes witnesses for `idx` (ascending), removing rows with none.
    /// Returns `(old index, new index)` for each surviving row of `idx`.
    fn refresh(&mut self, idx: &[usize]) -> Result<Vec<(usize, usize)>> {
        let n = self.anchor.len();
        let mut removed = vec![false; self.len()];
        for &j in idx {
            let rest = polytope_of(
                self.rows
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != j && !removed[k])
                    .map(|(_, (c, b))| (c, *b)),
                n,
            )?;
            let (c, b) = (&self.rows[j].0, self.rows[j].1);
            let tol = REDUNDANCY_TOL * c.norm();
            let from = match &self.witness[j] {
                Some(w) => pull_inside(&rest, &self.anchor, w),
                None => self.anchor.clone(),
            };
            let r = lp_solve_from(c, &rest, &from)?;
            self.witness[j] = match r.status {
                LpStatus::Optimal if r.value > b + tol => {
                    // Pull the optimum back to the hyperplane along the
                    // segment from the interior anchor.
                    let gap = c.dot(&r.x_opt) - c.dot(&self.anchor);
                    let s = (b - c.dot(&self.anchor)) / gap;
                    Some(&self.anchor + (&r.x_opt - &self.anchor) * s)
                }
                LpStatus::Optimal => {
                    removed[j] = true;
                    None
                }
                // Unbounded rest: the row is needed; no finite witness.
                _ => None,
            };
        }
        let old_len = self.len();
        let mut survivors = Vec::new();
        let mut pos = 0;
        let mut map = vec![usize::MAX; old_len];
        for k in 0..old_len {
            if !removed[k] {
                map[k] = pos;
                pos += 1;
            }
        }
        let mut k = 0;
        self.rows.retain(|_| {
            k += 1;
            !removed[k - 1]
        });
        let mut k = 0;
        self.witness.retain(|_| {
            k += 1;
            !removed[k - 1]
        });
        for &j in idx {
            if !removed[j] {
                survivors.push((j, map[j]));
            }
        }
        Ok(survivors)
    }
}

fn polytope_of<'a>(rows: impl Iterator<Item = (&'a DVector<f64>, f64)>, n: usize) -> Result<HPolytope> {
    let rows: Vec<_> = rows.collect();
    let c = DMatrix::from_fn(rows.len(), n, |i, k| rows[i].0[k]);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    Ok(HPolytope::new(c, b)?)
}

/// LP certificate: every facet `(c, b)` satisfies `max c(A+BK)x ≤ b` over the set.
pub fn is_invariant(sys: &LtiSystem, law: &TerminalLaw, set: &HPolytope) -> Result<bool> {
    let pre = preimage_rows(set, &sys.closed_loop(law))?;
    Ok(set.implied_rows(&pre)?.into_iter().all(|ok| ok))
}

/// `{x : Kx ∈ U}`: states where the terminal law respects the input set.
pub fn law_admissible_region(law: &TerminalLaw, input_set: &HPolytope) -> Result<HPolytope> {
    Ok(HPolytope::new(
        input_set.coefficients() * law.gain(),
        input_set.offsets().clone(),
    )?)
}

/// Last point of the segment `anchor → target` inside `set` (`anchor` feasible).
fn pull_inside(set: &HPolytope, anchor: &DVector<f64>, target: &DVector<f64>) -> DVector<f64> {
    let dir = target - anchor;
    let mut s: f64 = 1.0;
    for j in 0..set.n_rows() {
        let c = set.row(j);
        let rate = c.dot(&dir);
        if rate > 0.0 {
            s = s.min((set.offset(j) - c.dot(anchor)).max(0.0) / rate);
        }
    }
    anchor + dir * (s * (1.0 - 1e-9))
}

fn preimage_rows(set: &HPolytope, closed: &DMatrix<f64>) -> Result<HPolytope> {
    Ok(HPolytope::new(set.coefficients() * closed, set.offsets().clone())?)
}
