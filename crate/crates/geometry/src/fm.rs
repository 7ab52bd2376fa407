//! Fourier-Motzkin elimination.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeometryError, Result};
use crate::lp::ZERO_ROW;
use crate::planar;
use crate::polytope::HPolytope;

/// Projects `poly` onto all coordinates except `var`. The result lives in
/// dimension `dim - 1` and is pruned of redundant rows.
pub fn fourier_motzkin_eliminate(poly: &HPolytope, var: usize) -> Result<HPolytope> {
    let n = poly.dim();
    if var >= n {
        return Err(GeometryError::DimensionMismatch {
            expected: n,
            found: var,
        });
    }
    if n == 1 {
        return Err(GeometryError::ZeroDimension);
    }
    let c = poly.coefficients();
    let b = poly.offsets();
    let m = poly.n_rows();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut zero = Vec::new();
    for i in 0..m {
        let scale = c.row(i).amax().max(1.0);
        let a = c[(i, var)];
        if a.abs() <= ZERO_ROW * scale {
            zero.push(i);
        } else if a > 0.0 {
            pos.push(i);
        } else {
            neg.push(i);
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&k| k != var).collect();
    let out_rows = zero.len() + pos.len() * neg.len();
    let mut oc = DMatrix::zeros(out_rows, n - 1);
    let mut ob = DVector::zeros(out_rows);
    let mut r = 0;
    for &i in &zero {
        for (col, &k) in keep.iter().enumerate() {
            oc[(r, col)] = c[(i, k)];
        }
        ob[r] = b[i];
        r += 1;
    }
    if keep.len() == 2 {
        if let Some(p) = project_planar(poly, var, &zero, &pos, &neg, &keep) {
            return Ok(p);
        }
    }
    for &p in &pos {
        let wp = 1.0 / c[(p, var)];
        for &q in &neg {
            let wq = -1.0 / c[(q, var)];
            for (col, &k) in keep.iter().enumerate() {
                oc[(r, col)] = wp * c[(p, k)] + wq * c[(q, k)];
            }
            ob[r] = wp * b[p] + wq * b[q];
            r += 1;
        }
    }
    let oc = oc.rows(0, r).into_owned();
    let ob = ob.rows(0, r).into_owned();
    let mut oc = oc;
    // Flush cancellation noise to exact zeros.
    for i in 0..r {
        let scale = oc.row(i).amax();
        if scale <= ZERO_ROW {
            oc.row_mut(i).fill(0.0);
        }
    }
    let raw = HPolytope::new(oc, ob)?;
    Ok(raw.remove_redundant_rows())
}

/// Planar projection without forming every pairwise combination: start from
/// the rows that pair with a pure bound on `var` (an outer set), then add,
/// for each vertex that lies outside the projection, the combination it
/// violates most. Stops once every vertex is inside, at which point the
/// polygon equals the projection. `None` defers to plain elimination.
fn project_planar(
    poly: &HPolytope,
    var: usize,
    zero: &[usize],
    pos: &[usize],
    neg: &[usize],
    keep: &[usize],
) -> Option<HPolytope> {
    let c = poly.coefficients();
    let b = poly.offsets();
    let pure = |i: usize| keep.iter().all(|&k| c[(i, k)] == 0.0);
    let upper: Vec<usize> = pos.iter().copied().filter(|&i| pure(i)).collect();
    let lower: Vec<usize> = neg.iter().copied().filter(|&i| pure(i)).collect();
    if upper.is_empty() || lower.is_empty() {
        return None;
    }
    let combine = |p: usize, q: usize| -> ([f64; 2], f64) {
        let wp = 1.0 / c[(p, var)];
        let wq = -1.0 / c[(q, var)];
        (
            [
                wp * c[(p, keep[0])] + wq * c[(q, keep[0])],
                wp * c[(p, keep[1])] + wq * c[(q, keep[1])],
            ],
            wp * b[p] + wq * b[q],
        )
    };
    let mut rows: Vec<[f64; 2]> = Vec::new();
    let mut offs: Vec<f64> = Vec::new();
    let mut used = std::collections::HashSet::new();
    for &i in zero {
        rows.push([c[(i, keep[0])], c[(i, keep[1])]]);
        offs.push(b[i]);
    }
    let mut add = |p: usize, q: usize, rows: &mut Vec<[f64; 2]>, offs: &mut Vec<f64>| {
        if used.insert((p, q)) {
            let (r, o) = combine(p, q);
            rows.push(r);
            offs.push(o);
            true
        } else {
            false
        }
    };
    for &p in pos {
        for &q in &lower {
            add(p, q, &mut rows, &mut offs);
        }
    }
    for &q in neg {
        for &p in &upper {
            add(p, q, &mut rows, &mut offs);
        }
    }
    // `u ≤ −s_p` for every positive row and `u ≥ s_q` for every negative
    // one, so `v` projects from the set iff `max s_p + max s_q ≤ 0`.
    let excess = |i: usize, v: &DVector<f64>, sign: f64| {
        (c[(i, keep[0])] * v[0] + c[(i, keep[1])] * v[1] - b[i]) / (sign * c[(i, var)])
    };
    let scale = 1.0 + b.amax();
    for _ in 0..=pos.len() * neg.len() {
        let cm = DMatrix::from_fn(rows.len(), 2, |i, k| rows[i][k]);
        let bm = DVector::from_column_slice(&offs);
        let (edges, verts) = planar::polygon(&cm, &bm)?;
        let mut grew = false;
        for v in &verts {
            let best = |set: &[usize], sign: f64| {
                set.iter()
                    .map(|&i| (i, excess(i, v, sign)))
                    .fold((usize::MAX, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
            };
            let (p, sp) = best(pos, 1.0);
            let (q, sq) = best(neg, -1.0);
            let (r, _) = combine(p, q);
            let norm = (r[0] * r[0] + r[1] * r[1]).sqrt();
            if sp + sq > CUT_TOL * scale * norm.max(ZERO_ROW) {
                grew |= add(p, q, &mut rows, &mut offs);
            }
        }
        if !grew {
            let mut kept = edges;
            kept.sort_unstable();
            let sel: Vec<Vec<f64>> = kept.iter().map(|&i| rows[i].to_vec()).collect();
            let off: Vec<f64> = kept.iter().map(|&i| offs[i]).collect();
            return HPolytope::from_rows(2, &sel, &off).ok();
        }
    }
    None
}

/// Violation (on unit-normalized rows, relative to the offset scale) above
/// which a vertex counts as outside the projection.
const CUT_TOL: f64 = 1e-11;

/// Eliminates several coordinates, highest index first so the remaining
/// indices stay valid.
pub fn project_out(poly: &HPolytope, vars: &[usize]) -> Result<HPolytope> {
    let mut sorted = vars.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut cur = poly.clone();
    for &v in sorted.iter().rev() {
        cur = fourier_motzkin_eliminate(&cur, v)?;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eliminate_input_from_simple_system() {
        // x + u ≤ 1, 0 ≤ u ≤ 0.5 over (x, u).
        let p = HPolytope::from_rows(
            2,
            &[vec![1.0, 1.0], vec![0.0, -1.0], vec![0.0, 1.0]],
            &[1.0, 0.0, 0.5],
        )
        .unwrap();
        let q = fourier_motzkin_eliminate(&p, 1).unwrap();
        assert_eq!(q.dim(), 1);
        assert_eq!(q.n_rows(), 1);
        assert!((q.offset(0) / q.row(0)[0] - 1.0).abs() < 1e-12);
        assert!(q.row(0)[0] > 0.0);
    }

    #[test]
    fn unconstrained_remainder_is_universe() {
        let p = HPolytope::from_rows(2, &[vec![0.0, 1.0], vec![0.0, -1.0]], &[1.0, 1.0]).unwrap();
        let q = fourier_motzkin_eliminate(&p, 1).unwrap();
        assert_eq!(q.dim(), 1);
        assert_eq!(q.n_rows(), 0);
    }

    #[test]
    fn infeasible_projection_is_representable() {
        let p = HPolytope::from_rows(2, &[vec![0.0, 1.0], vec![0.0, -1.0]], &[1.0, -2.0]).unwrap();
        let q = fourier_motzkin_eliminate(&p, 1).unwrap();
        assert!(q.is_empty().unwrap());
    }

    #[test]
    fn invalid_index() {
        let p = HPolytope::symmetric_box(2, 1.0).unwrap();
        assert!(fourier_motzkin_eliminate(&p, 2).is_err());
    }
}
