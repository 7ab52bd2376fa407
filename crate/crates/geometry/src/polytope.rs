//! Halfspace-represented polytopes `{x : Cx ≤ b}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::lp::{lp_solve, LpStatus, RowSet, FEAS_TOL};
use crate::record::{vec_to_vector, vector_to_vec, MatrixRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct HPolytope {
    c: DMatrix<f64>,
    b: DVector<f64>,
}

impl HPolytope {
    pub fn new(c: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if c.ncols() == 0 {
            return Err(GeometryError::ZeroDimension);
        }
        if c.nrows() != b.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: c.nrows(),
                found: b.len(),
            });
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("constraint matrix"));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("constraint offsets"));
        }
        Ok(HPolytope { c, b })
    }

    /// Builds a polytope from row slices; all rows must have length `dim`.
    pub fn from_rows(dim: usize, rows: &[Vec<f64>], b: &[f64]) -> Result<Self> {
        let mut c = DMatrix::zeros(rows.len(), dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(GeometryError::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            for (k, v) in r.iter().enumerate() {
                c[(i, k)] = *v;
            }
        }
        Self::new(c, DVector::from_column_slice(b))
    }

    /// The whole space (no rows).
    pub fn universe(dim: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(0, dim), DVector::zeros(0))
    }

    pub fn from_box(lo: &DVector<f64>, hi: &DVector<f64>) -> Result<Self> {
        let n = lo.len();
        if hi.len() != n {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                found: hi.len(),
            });
        }
        let mut c = DMatrix::zeros(2 * n, n);
        let mut b = DVector::zeros(2 * n);
        for k in 0..n {
            c[(2 * k, k)] = 1.0;
            b[2 * k] = hi[k];
            c[(2 * k + 1, k)] = -1.0;
            b[2 * k + 1] = -lo[k];
        }
        Self::new(c, b)
    }

    /// Symmetric box `{x : |x_k| ≤ bound}`.
    pub fn symmetric_box(dim: usize, bound: f64) -> Result<Self> {
        let hi = DVector::from_element(dim, bound);
        Self::from_box(&(-&hi), &hi)
    }

    pub fn dim(&self) -> usize {
        self.c.ncols()
    }

    pub fn n_rows(&self) -> usize {
        self.c.nrows()
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn offsets(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn row(&self, j: usize) -> DVector<f64> {
        self.c.row(j).transpose()
    }

    pub fn offset(&self, j: usize) -> f64 {
        self.b[j]
    }

    /// Largest raw residual `c_j x − b_j` (negative when strictly inside,
    /// `-inf` for an empty row set).
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let r = &self.c * x - &self.b;
        r.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.n_rows() == 0 || self.max_violation(x) <= tol
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn intersect(&self, other: &HPolytope) -> Result<HPolytope> {
        if other.dim() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let m1 = self.n_rows();
        let m2 = other.n_rows();
        let mut c = DMatrix::zeros(m1 + m2, self.dim());
        c.rows_mut(0, m1).copy_from(&self.c);
        c.rows_mut(m1, m2).copy_from(&other.c);
        let mut b = DVector::zeros(m1 + m2);
        b.rows_mut(0, m1).copy_from(&self.b);
        b.rows_mut(m1, m2).copy_from(&other.b);
        HPolytope::new(c, b)
    }

    pub fn select_rows(&self, idx: &[usize]) -> HPolytope {
        let c = self.c.select_rows(idx.iter());
        let b = self.b.select_rows(idx.iter());
        HPolytope { c, b }
    }

    /// `{x : C(Mx + t) ≤ b}`.
    pub fn preimage(&self, m: &DMatrix<f64>, t: &DVector<f64>) -> Result<HPolytope> {
        if m.nrows() != self.dim() || t.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                found: m.nrows(),
            });
        }
        HPolytope::new(&self.c * m, &self.b - &self.c * t)
    }

    /// Per-axis bounds by 2n LPs.
    pub fn bounding_box(&self) -> Result<(DVector<f64>, DVector<f64>)> {
        let n = self.dim();
        let mut lo = DVector::zeros(n);
        let mut hi = DVector::zeros(n);
        for k in 0..n {
            for sign in [1.0, -1.0] {
                let mut cost = DVector::zeros(n);
                cost[k] = sign;
                let r = lp_solve(&cost, self)?;
                match r.status {
                    LpStatus::Optimal => {
                        if sign > 0.0 {
                            hi[k] = r.value;
                        } else {
                            lo[k] = -r.value;
                        }
                    }
                    LpStatus::Infeasible => return Err(GeometryError::EmptySet),
                    LpStatus::Unbounded => return Err(GeometryError::Unbounded),
                    LpStatus::IterationLimit => {
                        return Err(GeometryError::Numerical("LP iteration limit".into()))
                    }
                }
            }
        }
        Ok((lo, hi))
    }

    /// Largest inscribed ball `(center, radius)`. A negative radius never
    /// occurs: empty sets yield `EmptySet`.
    pub fn chebyshev_ball(&self) -> Result<(DVector<f64>, f64)> {
        let n = self.dim();
        let m = self.n_rows();
        if m == 0 {
            return Err(GeometryError::Unbounded);
        }
        let mut c = DMatrix::zeros(m, n + 1);
        for i in 0..m {
            let norm = self.c.row(i).norm();
            for k in 0..n {
                c[(i, k)] = self.c[(i, k)];
            }
            c[(i, n)] = norm;
        }
        let lifted = HPolytope::new(c, self.b.clone())?;
        let mut cost = DVector::zeros(n + 1);
        cost[n] = 1.0;
        let r = lp_solve(&cost, &lifted)?;
        match r.status {
            LpStatus::Optimal => {
                let radius = r.x_opt[n];
                if radius < -FEAS_TOL {
                    return Err(GeometryError::EmptySet);
                }
                Ok((r.x_opt.rows(0, n).into_owned(), radius.max(0.0)))
            }
            LpStatus::Infeasible => Err(GeometryError::EmptySet),
            LpStatus::Unbounded => Err(GeometryError::Unbounded),
            LpStatus::IterationLimit => Err(GeometryError::Numerical("LP iteration limit".into())),
        }
    }

    pub fn is_empty(&self) -> Result<bool> {
        let rows = RowSet::new(&self.c, &self.b);
        let idx: Vec<usize> = (0..rows.len()).collect();
        Ok(matches!(
            rows.find_feasible(&idx),
            crate::lp::Feasibility::Infeasible(..)
        ))
    }

    /// Interprets the rows as an axis-aligned box if every row has exactly one
    /// nonzero coefficient and each axis is bounded on both sides.
    pub fn as_box(&self) -> Option<(DVector<f64>, DVector<f64>)> {
        let n = self.dim();
        let mut lo = DVector::from_element(n, f64::NEG_INFINITY);
        let mut hi = DVector::from_element(n, f64::INFINITY);
        for i in 0..self.n_rows() {
            let nz: Vec<usize> = (0..n).filter(|&k| self.c[(i, k)] != 0.0).collect();
            if nz.len() != 1 {
                return None;
            }
            let k = nz[0];
            let a = self.c[(i, k)];
            let bound = self.b[i] / a;
            if a > 0.0 {
                hi[k] = hi[k].min(bound);
            } else {
                lo[k] = lo[k].max(bound);
            }
        }
        if (0..n).all(|k| lo[k].is_finite() && hi[k].is_finite() && lo[k] <= hi[k]) {
            Some((lo, hi))
        } else {
            None
        }
    }

    /// Vertices of a bounded, nonempty polytope in dimension 1, 2 or 3.
    pub fn vertices(&self) -> Result<Vec<DVector<f64>>> {
        match self.dim() {
            1 => {
                let (lo, hi) = self.bounding_box()?;
                if (hi[0] - lo[0]).abs() <= FEAS_TOL {
                    Ok(vec![lo])
                } else {
                    Ok(vec![lo, hi])
                }
            }
            2 => self.vertices_2d(),
            3 => self.vertices_3d(),
            d => Err(GeometryError::VertexEnumeration(format!(
                "dimension {d} > 3"
            ))),
        }
    }

    fn vertices_2d(&self) -> Result<Vec<DVector<f64>>> {
        if let Some((_, verts)) = crate::planar::polygon(&self.c, &self.b) {
            return Ok(verts);
        }
        self.bounding_box()?;
        let pruned = self.remove_redundant_rows();
        let m = pruned.n_rows();
        if m < 3 {
            return Err(GeometryError::NotFullDimensional { radius: 0.0 });
        }
        let mut order: Vec<(f64, usize)> = (0..m)
            .map(|i| (pruned.c[(i, 1)].atan2(pruned.c[(i, 0)]), i))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out = Vec::with_capacity(m);
        for k in 0..m {
            let i = order[k].1;
            let j = order[(k + 1) % m].1;
            let a = nalgebra::Matrix2::new(
                pruned.c[(i, 0)],
                pruned.c[(i, 1)],
                pruned.c[(j, 0)],
                pruned.c[(j, 1)],
            );
            let rhs = nalgebra::Vector2::new(pruned.b[i], pruned.b[j]);
            let v = a
                .lu()
                .solve(&rhs)
                .ok_or_else(|| GeometryError::Numerical("parallel adjacent facets".into()))?;
            out.push(DVector::from_vec(vec![v[0], v[1]]));
        }
        Ok(out)
    }

    fn vertices_3d(&self) -> Result<Vec<DVector<f64>>> {
        self.bounding_box()?;
        let pruned = self.remove_redundant_rows();
        let m = pruned.n_rows();
        let scale = 1.0 + pruned.b.amax();
        let mut out: Vec<DVector<f64>> = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                for k in j + 1..m {
                    let a = pruned.c.select_rows([i, j, k].iter());
                    let rhs = DVector::from_vec(vec![pruned.b[i], pruned.b[j], pruned.b[k]]);
                    let lu = a.clone().lu();
                    if lu.determinant().abs() < 1e-12 {
                        continue;
                    }
                    let Some(v) = lu.solve(&rhs) else { continue };
                    if pruned.max_violation(&v) > 1e-9 * scale {
                        continue;
                    }
                    if out.iter().all(|w| (w - &v).amax() > 1e-9 * scale) {
                        out.push(v);
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(GeometryError::EmptySet);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeRecord {
    pub c: MatrixRecord,
    pub b: Vec<f64>,
}

impl From<&HPolytope> for PolytopeRecord {
    fn from(p: &HPolytope) -> Self {
        PolytopeRecord {
            c: MatrixRecord::from_matrix(&p.c),
            b: vector_to_vec(&p.b),
        }
    }
}

impl TryFrom<&PolytopeRecord> for HPolytope {
    type Error = GeometryError;

    fn try_from(r: &PolytopeRecord) -> Result<Self> {
        HPolytope::new(r.c.to_matrix()?, vec_to_vector(&r.b)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> HPolytope {
        HPolytope::symmetric_box(2, 1.0).unwrap()
    }

    #[test]
    fn rejects_mismatched_offsets() {
        let r = HPolytope::new(DMatrix::zeros(2, 2), DVector::zeros(3));
        assert!(matches!(r, Err(GeometryError::DimensionMismatch { .. })));
        assert!(matches!(
            HPolytope::new(DMatrix::zeros(0, 0), DVector::zeros(0)),
            Err(GeometryError::ZeroDimension)
        ));
    }

    #[test]
    fn box_round_trip() {
        let (lo, hi) = square().as_box().unwrap();
        assert_eq!(lo, DVector::from_vec(vec![-1.0, -1.0]));
        assert_eq!(hi, DVector::from_vec(vec![1.0, 1.0]));
        let (lo2, hi2) = square().bounding_box().unwrap();
        assert!((lo2 - lo).amax() < 1e-12 && (hi2 - hi).amax() < 1e-12);
    }

    #[test]
    fn chebyshev_of_square() {
        let (c, r) = square().chebyshev_ball().unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert!(c.amax() < 1e-12);
    }

    #[test]
    fn chebyshev_of_empty_set() {
        let p = HPolytope::from_rows(1, &[vec![1.0], vec![-1.0]], &[1.0, -2.0]).unwrap();
        assert_eq!(p.chebyshev_ball(), Err(GeometryError::EmptySet));
        assert!(p.is_empty().unwrap());
    }

    #[test]
    fn square_vertices() {
        let v = square().vertices().unwrap();
        assert_eq!(v.len(), 4);
        for p in &v {
            assert!((p[0].abs() - 1.0).abs() < 1e-12 && (p[1].abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cube_vertices() {
        let v = HPolytope::symmetric_box(3, 2.0).unwrap().vertices().unwrap();
        assert_eq!(v.len(), 8);
    }

    #[test]
    fn preimage_of_box() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let p = square().preimage(&m, &DVector::zeros(2)).unwrap();
        assert!(p.contains(&DVector::from_vec(vec![0.5, 1.0]), 0.0));
        assert!(!p.contains(&DVector::from_vec(vec![0.6, 0.0]), 0.0));
    }

    #[test]
    fn record_round_trip() {
        let rec = PolytopeRecord::from(&square());
        assert_eq!(HPolytope::try_from(&rec).unwrap(), square());
    }
}
