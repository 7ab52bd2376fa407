//! Minimum-volume enclosing ellipsoid of a point set.
//!
//! Khachiyan's algorithm with Todd-Yıldırım away steps, run in the affine
//! hull of the points. Directions orthogonal to the hull get a tiny
//! semi-axis so the result stays a proper (invertible) ellipsoid.

use nalgebra::{DMatrix, DVector};

use crate::ellipsoid::Ellipsoid;
use crate::error::{GeometryError, Result};

/// Semi-axis used for degenerate directions, relative to the data scale.
pub const DEGENERATE_INFLATION: f64 = 1e-9;
const HULL_TOL: f64 = 1e-10;
const MAX_ITERS: usize = 200_000;

/// Enclosing ellipsoid whose volume is within roughly `(1 + tol)` of the
/// minimum for full-dimensional inputs. Every point is contained.
pub fn mvee(points: &[DVector<f64>], tol: f64) -> Result<Ellipsoid> {
    let first = points.first().ok_or(GeometryError::EmptyInput)?;
    let n = first.len();
    if n == 0 {
        return Err(GeometryError::ZeroDimension);
    }
    for p in points {
        if p.len() != n {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                found: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("point set"));
        }
    }
    let m = points.len();
    let mean = points.iter().fold(DVector::zeros(n), |acc, p| acc + p) / m as f64;
    let spread = points.iter().map(|p| (p - &mean).norm()).fold(0.0, f64::max);
    let scale = if spread > 0.0 { spread } else { mean.amax().max(1.0) };
    let eps = DEGENERATE_INFLATION * scale;

    let mut scatter = DMatrix::zeros(n, n);
    for p in points {
        let d = p - &mean;
        scatter += &d * d.transpose();
    }
    let eig = scatter.symmetric_eigen();
    let mut hull = Vec::new();
    let mut normal = Vec::new();
    for k in 0..n {
        let v = eig.eigenvectors.column(k).into_owned();
        let width = points
            .iter()
            .map(|p| v.dot(&(p - &mean)).abs())
            .fold(0.0, f64::max);
        if width > HULL_TOL * scale {
            hull.push(v);
        } else {
            normal.push(v);
        }
    }
    let r = hull.len();
    let mut shape = DMatrix::zeros(n, n);
    let mut center = mean.clone();
    if r > 0 {
        let basis = DMatrix::from_columns(&hull);
        let ys: Vec<DVector<f64>> = points.iter().map(|p| basis.transpose() * (p - &mean)).collect();
        let (c, a) = khachiyan(&ys, tol)?;
        let chol = a
            .cholesky()
            .ok_or_else(|| GeometryError::Numerical("MVEE shape not positive definite".into()))?;
        let top = chol.l().transpose() * basis.transpose();
        shape.rows_mut(0, r).copy_from(&top);
        center += &basis * c;
    }
    for (k, v) in normal.iter().enumerate() {
        shape.set_row(r + k, &(v.transpose() / eps));
    }
    let e = Ellipsoid::new(shape.clone(), center.clone())?;
    let worst = points.iter().map(|p| e.gauge(p)).fold(0.0, f64::max);
    if worst > 1.0 {
        return Ellipsoid::new(shape / worst, center);
    }
    Ok(e)
}

/// Returns `(c, A)` with all `y_j` in `{y : (y − c)ᵀA(y − c) ≤ 1}` up to
/// `tol`; the points must affinely span their space.
fn khachiyan(ys: &[DVector<f64>], tol: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let d = ys[0].len();
    let m = ys.len();
    let lifted: Vec<DVector<f64>> = ys
        .iter()
        .map(|y| {
            let mut q = DVector::zeros(d + 1);
            q.rows_mut(0, d).copy_from(y);
            q[d] = 1.0;
            q
        })
        .collect();
    let mut u = vec![1.0 / m as f64; m];
    let dd = (d + 1) as f64;
    let tol = tol.max(1e-14);
    for _ in 0..MAX_ITERS {
        let mut x = DMatrix::zeros(d + 1, d + 1);
        for (q, &w) in lifted.iter().zip(&u) {
            if w > 0.0 {
                x.ger(w, q, q, 1.0);
            }
        }
        let chol = x
            .cholesky()
            .ok_or_else(|| GeometryError::Numerical("degenerate MVEE iterate".into()))?;
        let mvals: Vec<f64> = lifted
            .iter()
            .map(|q| {
                let s = chol.solve(q);
                q.dot(&s)
            })
            .collect();
        let (jp, mp) = mvals
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc });
        let (jm, mm) = mvals
            .iter()
            .enumerate()
            .filter(|(j, _)| u[*j] > 0.0)
            .fold((0, f64::INFINITY), |acc, (j, &v)| if v < acc.1 { (j, v) } else { acc });
        let eps_plus = mp / dd - 1.0;
        let eps_minus = 1.0 - mm / dd;
        if eps_plus <= tol && eps_minus <= tol {
            break;
        }
        if eps_plus >= eps_minus {
            let beta = (mp - dd) / (dd * (mp - 1.0));
            for w in u.iter_mut() {
                *w *= 1.0 - beta;
            }
            u[jp] += beta;
        } else {
            let cap = u[jm] / (1.0 - u[jm]);
            let beta = if mm > 1.0 + 1e-12 {
                ((dd - mm) / (dd * (mm - 1.0))).min(cap)
            } else {
                cap
            };
            for w in u.iter_mut() {
                *w *= 1.0 + beta;
            }
            u[jm] -= beta;
            if u[jm] < 1e-300 {
                u[jm] = 0.0;
            }
        }
    }
    let mut c = DVector::zeros(d);
    for (y, &w) in ys.iter().zip(&u) {
        c.axpy(w, y, 1.0);
    }
    let mut cov = DMatrix::zeros(d, d);
    for (y, &w) in ys.iter().zip(&u) {
        cov.ger(w, y, y, 1.0);
    }
    cov -= &c * c.transpose();
    let a = cov
        .try_inverse()
        .ok_or_else(|| GeometryError::Numerical("singular MVEE covariance".into()))?
        / d as f64;
    let a = (&a + a.transpose()) * 0.5;
    Ok((c, a))
}
