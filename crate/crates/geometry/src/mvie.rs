//! Maximum-volume inscribed ellipsoid of a polytope.
//!
//! The ellipsoid is `{Bu + d : ‖u‖ ≤ 1}` with `B` symmetric positive definite.
//! It lies in `{x : c·x ≤ b}` iff `‖Bc‖ + c·d ≤ b`, so the problem is
//! `max log det B` under second-order cone constraints. We follow the barrier
//! path `t·log det B + Σ log(b − c·d − ‖Bc‖)` with damped Newton steps,
//! starting from a shrunken Chebyshev ball. Every iterate is strictly
//! feasible, so stopping early still yields a certified inner ellipsoid.

use nalgebra::{DMatrix, DVector};

use crate::ellipsoid::{halfspace_covers_ellipsoid, Ellipsoid};
use crate::error::{GeometryError, Result};
use crate::polytope::HPolytope;

const GAP_TOL: f64 = 1e-8;
const NEWTON_TOL: f64 = 1e-12;
const MAX_NEWTON: usize = 100;

/// Inner ellipsoid satisfying `‖cL⁻¹‖ ≤ b − c·q` for every row.
pub fn inscribed_ellipsoid(poly: &HPolytope) -> Result<Ellipsoid> {
    let n = poly.dim();
    let (z, radius) = poly.chebyshev_ball()?;
    if radius <= 1e-10 * (1.0 + z.amax()) {
        return Err(GeometryError::NotFullDimensional { radius });
    }
    let rows: Vec<(DVector<f64>, f64)> = (0..poly.n_rows())
        .filter_map(|j| {
            let c = poly.row(j);
            let norm = c.norm();
            (norm > 0.0).then(|| (c / norm, poly.offset(j) / norm))
        })
        .collect();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let problem = Barrier { n, rows, pairs };

    let mut theta = problem.pack(&(DMatrix::identity(n, n) * (0.5 * radius)), &z);
    let m = problem.rows.len().max(1) as f64;
    let mut t = 1.0;
    loop {
        theta = problem.center(theta, t)?;
        if m / t < GAP_TOL {
            break;
        }
        t *= 8.0;
    }
    let (b_mat, d) = problem.unpack(&theta);
    certify(poly, b_mat, d)
}

/// Builds `E(B⁻¹, d)`, shrinking about the center until the analytic
/// per-row test passes in floating point.
fn certify(poly: &HPolytope, b_mat: DMatrix<f64>, d: DVector<f64>) -> Result<Ellipsoid> {
    for k in 0..12 {
        let shrink = if k == 0 { 1.0 } else { 1.0 - 1e-12 * 10f64.powi(k) };
        let shape = (&b_mat * shrink)
            .try_inverse()
            .ok_or(GeometryError::Singular)?;
        let e = Ellipsoid::new(shape, d.clone())?;
        let mut ok = true;
        for j in 0..poly.n_rows() {
            if !halfspace_covers_ellipsoid(&poly.row(j), poly.offset(j), &e)? {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(e);
        }
    }
    Err(GeometryError::Numerical(
        "inscribed ellipsoid failed its containment certificate".into(),
    ))
}

struct Barrier {
    n: usize,
    rows: Vec<(DVector<f64>, f64)>,
    pairs: Vec<(usize, usize)>,
}

impl Barrier {
    fn p(&self) -> usize {
        self.pairs.len()
    }

    fn pack(&self, b: &DMatrix<f64>, d: &DVector<f64>) -> DVector<f64> {
        let p = self.p();
        let mut th = DVector::zeros(p + self.n);
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            th[k] = b[(i, j)];
        }
        th.rows_mut(p, self.n).copy_from(d);
        th
    }

    fn unpack(&self, th: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
        let p = self.p();
        let mut b = DMatrix::zeros(self.n, self.n);
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            b[(i, j)] = th[k];
            b[(j, i)] = th[k];
        }
        (b, th.rows(p, self.n).into_owned())
    }

    /// `E_k c` for every basis matrix, as columns.
    fn basis_times(&self, c: &DVector<f64>) -> DMatrix<f64> {
        let mut ec = DMatrix::zeros(self.n, self.p());
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            if i == j {
                ec[(i, k)] = c[i];
            } else {
                ec[(i, k)] = c[j];
                ec[(j, k)] = c[i];
            }
        }
        ec
    }

    /// Objective value, or `None` outside the domain.
    fn value(&self, th: &DVector<f64>, t: f64) -> Option<f64> {
        let (b, d) = self.unpack(th);
        let chol = b.clone().cholesky()?;
        let logdet = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let mut f = t * logdet;
        for (c, off) in &self.rows {
            let s = off - c.dot(&d) - (&b * c).norm();
            if !(s > 0.0) {
                return None;
            }
            f += s.ln();
        }
        Some(f)
    }

    fn derivatives(&self, th: &DVector<f64>, t: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let p = self.p();
        let n = self.n;
        let dim = p + n;
        let (b, d) = self.unpack(th);
        let b_inv = b
            .clone()
            .try_inverse()
            .ok_or(GeometryError::Singular)?;
        let mut grad = DVector::zeros(dim);
        let mut hess = DMatrix::zeros(dim, dim);

        let basis: Vec<DMatrix<f64>> = self
            .pairs
            .iter()
            .map(|&(i, j)| {
                let mut e = DMatrix::zeros(n, n);
                e[(i, j)] = 1.0;
                e[(j, i)] = 1.0;
                e
            })
            .collect();
        let prods: Vec<DMatrix<f64>> = basis.iter().map(|e| &b_inv * e).collect();
        for k in 0..p {
            grad[k] += t * prods[k].trace();
            for l in 0..p {
                hess[(k, l)] -= t * (&prods[k] * &prods[l]).trace();
            }
        }

        for (c, off) in &self.rows {
            let w = &b * c;
            let nu = w.norm();
            let s = off - c.dot(&d) - nu;
            let ec = self.basis_times(c);
            let g = ec.transpose() * &w / nu;
            let hnu = (ec.transpose() * &ec - &g * g.transpose()) / nu;
            let mut ds = DVector::zeros(dim);
            ds.rows_mut(0, p).copy_from(&(-&g));
            ds.rows_mut(p, n).copy_from(&(-c));
            grad += &ds / s;
            hess -= &ds * ds.transpose() / (s * s);
            let mut block = hess.view_mut((0, 0), (p, p));
            block -= &hnu / s;
        }
        Ok((grad, hess))
    }

    /// Damped Newton ascent to the barrier maximizer for weight `t`.
    fn center(&self, mut th: DVector<f64>, t: f64) -> Result<DVector<f64>> {
        for _ in 0..MAX_NEWTON {
            let (grad, hess) = self.derivatives(&th, t)?;
            let neg = -hess;
            let step = match neg.clone().cholesky() {
                Some(ch) => ch.solve(&grad),
                None => {
                    let dim = grad.len();
                    let shift = 1e-10 * (1.0 + neg.amax());
                    (neg + DMatrix::identity(dim, dim) * shift)
                        .cholesky()
                        .ok_or_else(|| GeometryError::Numerical("barrier Hessian".into()))?
                        .solve(&grad)
                }
            };
            let decrement = grad.dot(&step);
            // Relative to the objective's magnitude: at large t the line
            // search cannot resolve smaller gains anyway.
            if decrement / 2.0 <= NEWTON_TOL * (t + self.rows.len() as f64) {
                break;
            }
            let f0 = self.value(&th, t).ok_or_else(|| {
                GeometryError::Numerical("barrier iterate left the domain".into())
            })?;
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-14 {
                let cand = &th + &step * alpha;
                if let Some(f) = self.value(&cand, t) {
                    if f >= f0 + 0.25 * alpha * decrement {
                        th = cand;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved {
                break;
            }
        }
        Ok(th)
    }
}
