//! Half-plane intersection in the plane, sorted by normal angle.
//!
//! Used as a fast path for vertex enumeration and projection in 2-D. The
//! result is checked against every input row; callers fall back to the LP
//! route when it returns `None`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

const PARALLEL: f64 = 1e-12;

/// Rows (indices into the input) bounding the polygon `{x : Cx ≤ b}`, in
/// counter-clockwise order, with the vertex shared by each row and the next.
/// `None` when the set is empty, unbounded, degenerate or the result fails
/// its check.
pub(crate) fn polygon(c: &DMatrix<f64>, b: &DVector<f64>) -> Option<(Vec<usize>, Vec<DVector<f64>>)> {
    if c.ncols() != 2 {
        return None;
    }
    let scale = 1.0 + b.amax();
    let mut lines: Vec<(f64, usize, Vector2<f64>, f64)> = Vec::with_capacity(c.nrows());
    for i in 0..c.nrows() {
        let a = Vector2::new(c[(i, 0)], c[(i, 1)]);
        let norm = a.norm();
        if norm <= 1e-12 {
            if b[i] < 0.0 {
                return None;
            }
            continue;
        }
        lines.push((a[1].atan2(a[0]), i, a / norm, b[i] / norm));
    }
    if lines.len() < 3 {
        return None;
    }
    lines.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.3.total_cmp(&y.3)).then(x.1.cmp(&y.1)));
    // Same direction: keep the tightest (first after sorting by offset).
    let mut uniq: Vec<(f64, usize, Vector2<f64>, f64)> = Vec::with_capacity(lines.len());
    for l in lines {
        match uniq.last() {
            Some(u) if (l.2 - u.2).norm() <= PARALLEL => {}
            _ => uniq.push(l),
        }
    }
    // Bounded iff no angular gap reaches π.
    let k = uniq.len();
    for j in 0..k {
        let next = if j + 1 < k { uniq[j + 1].0 } else { uniq[0].0 + std::f64::consts::TAU };
        if next - uniq[j].0 >= std::f64::consts::PI - 1e-12 {
            return None;
        }
    }

    let meet = |p: &(f64, usize, Vector2<f64>, f64), q: &(f64, usize, Vector2<f64>, f64)| {
        let m = Matrix2::new(p.2[0], p.2[1], q.2[0], q.2[1]);
        if m.determinant().abs() <= PARALLEL {
            return None;
        }
        m.lu().solve(&Vector2::new(p.3, q.3))
    };
    let outside = |l: &(f64, usize, Vector2<f64>, f64), v: &Vector2<f64>| l.2.dot(v) > l.3 + 1e-13 * scale;

    let mut dq: VecDeque<(f64, usize, Vector2<f64>, f64)> = VecDeque::with_capacity(k);
    for l in uniq {
        while dq.len() >= 2 {
            let v = meet(&dq[dq.len() - 2], &dq[dq.len() - 1])?;
            if outside(&l, &v) {
                dq.pop_back();
            } else {
                break;
            }
        }
        while dq.len() >= 2 {
            let v = meet(&dq[0], &dq[1])?;
            if outside(&l, &v) {
                dq.pop_front();
            } else {
                break;
            }
        }
        dq.push_back(l);
    }
    loop {
        let mut changed = false;
        while dq.len() >= 3 {
            let v = meet(&dq[dq.len() - 2], &dq[dq.len() - 1])?;
            if outside(&dq[0], &v) {
                dq.pop_back();
                changed = true;
            } else {
                break;
            }
        }
        while dq.len() >= 3 {
            let v = meet(&dq[0], &dq[1])?;
            if outside(&dq[dq.len() - 1], &v) {
                dq.pop_front();
                changed = true;
            } else {
                break;
            }
        }
        if !changed {
            break;
        }
    }

    // Drop rows whose edge has collapsed to a point.
    let mut cycle: Vec<(f64, usize, Vector2<f64>, f64)> = dq.into_iter().collect();
    loop {
        let m = cycle.len();
        if m < 3 {
            return None;
        }
        let verts: Vec<Vector2<f64>> = (0..m)
            .map(|j| meet(&cycle[j], &cycle[(j + 1) % m]))
            .collect::<Option<_>>()?;
        let collapsed = (0..m).find(|&j| (verts[j] - verts[(j + m - 1) % m]).norm() <= 1e-12 * scale);
        match collapsed {
            Some(j) => {
                cycle.remove(j);
            }
            None => {
                // Every vertex must satisfy every input row.
                for v in &verts {
                    for i in 0..c.nrows() {
                        let lhs = c[(i, 0)] * v[0] + c[(i, 1)] * v[1];
                        let norm = (c[(i, 0)].powi(2) + c[(i, 1)].powi(2)).sqrt().max(1.0);
                        if lhs > b[i] + 1e-9 * scale * norm {
                            return None;
                        }
                    }
                }
                // Orientation check: consecutive rows turn counter-clockwise.
                for j in 0..m {
                    let a = cycle[j].2;
                    let n = cycle[(j + 1) % m].2;
                    if a[0] * n[1] - a[1] * n[0] <= 0.0 {
                        return None;
                    }
                }
                let rows = cycle.iter().map(|l| l.1).collect();
                let pts = verts.iter().map(|v| DVector::from_vec(vec![v[0], v[1]])).collect();
                return Some((rows, pts));
            }
        }
    }
}
