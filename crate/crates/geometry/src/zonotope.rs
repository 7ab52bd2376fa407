//! Zonotopes `c ⊕ Σ [−1, 1]·g_k`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::lp::{lp_solve, LpStatus};
use crate::polytope::HPolytope;
use crate::record::{vec_to_vector, vector_to_vec, MatrixRecord};

/// Sign-combination enumeration is used up to this many generators when the
/// dimension exceeds 2.
pub const MAX_ENUMERATED_GENERATORS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Zonotope {
    center: DVector<f64>,
    /// One generator per column.
    generators: DMatrix<f64>,
}

impl Zonotope {
    pub fn new(center: DVector<f64>, generators: DMatrix<f64>) -> Result<Self> {
        if center.is_empty() {
            return Err(GeometryError::ZeroDimension);
        }
        if generators.nrows() != center.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: center.len(),
                found: generators.nrows(),
            });
        }
        if center.iter().chain(generators.iter()).any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("zonotope"));
        }
        Ok(Zonotope { center, generators })
    }

    pub fn point(center: DVector<f64>) -> Result<Self> {
        let n = center.len();
        Self::new(center, DMatrix::zeros(n, 0))
    }

    /// The box `[lo, hi]`.
    pub fn from_box(lo: &DVector<f64>, hi: &DVector<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        let center = (lo + hi) * 0.5;
        let half = (hi - lo) * 0.5;
        Self::new(center, DMatrix::from_diagonal(&half))
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.generators
    }

    pub fn n_generators(&self) -> usize {
        self.generators.ncols()
    }

    /// `{Mz : z ∈ Z}`.
    pub fn linear_map(&self, m: &DMatrix<f64>) -> Result<Zonotope> {
        if m.ncols() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                found: m.ncols(),
            });
        }
        Zonotope::new(m * &self.center, m * &self.generators)
    }

    pub fn minkowski_sum(&self, other: &Zonotope) -> Result<Zonotope> {
        if other.dim() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let k1 = self.n_generators();
        let k2 = other.n_generators();
        let mut g = DMatrix::zeros(self.dim(), k1 + k2);
        g.columns_mut(0, k1).copy_from(&self.generators);
        g.columns_mut(k1, k2).copy_from(&other.generators);
        Zonotope::new(&self.center + &other.center, g)
    }

    /// `max_{z∈Z} c·z`.
    pub fn support(&self, c: &DVector<f64>) -> f64 {
        let proj = self.generators.transpose() * c;
        c.dot(&self.center) + proj.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Vertex candidates: the exact vertex cycle in 2-D, all sign
    /// combinations otherwise (a superset of the vertices).
    pub fn vertices(&self) -> Result<Vec<DVector<f64>>> {
        let gens: Vec<DVector<f64>> = (0..self.n_generators())
            .map(|k| self.generators.column(k).into_owned())
            .filter(|g| g.amax() > 0.0)
            .collect();
        if gens.is_empty() {
            return Ok(vec![self.center.clone()]);
        }
        match self.dim() {
            1 => {
                let r: f64 = gens.iter().map(|g| g[0].abs()).sum();
                Ok(vec![
                    &self.center - DVector::from_element(1, r),
                    &self.center + DVector::from_element(1, r),
                ])
            }
            2 => Ok(self.vertices_2d(gens)),
            _ => {
                if gens.len() > MAX_ENUMERATED_GENERATORS {
                    return Err(GeometryError::VertexEnumeration(format!(
                        "{} generators in dimension {}; use an outer box instead",
                        gens.len(),
                        self.dim()
                    )));
                }
                let k = gens.len();
                let mut out = Vec::with_capacity(1 << k);
                for mask in 0u32..(1u32 << k) {
                    let mut p = self.center.clone();
                    for (j, g) in gens.iter().enumerate() {
                        if mask & (1 << j) != 0 {
                            p += g;
                        } else {
                            p -= g;
                        }
                    }
                    out.push(p);
                }
                Ok(out)
            }
        }
    }

    fn vertices_2d(&self, gens: Vec<DVector<f64>>) -> Vec<DVector<f64>> {
        // Orient every generator into the upper half plane, sort by angle,
        // then walk the boundary.
        let mut oriented: Vec<(f64, DVector<f64>)> = gens
            .into_iter()
            .map(|g| {
                let g = if g[1] < 0.0 || (g[1] == 0.0 && g[0] < 0.0) { -g } else { g };
                (g[1].atan2(g[0]), g)
            })
            .collect();
        oriented.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut start = self.center.clone();
        for (_, g) in &oriented {
            start -= g;
        }
        let mut out = Vec::with_capacity(2 * oriented.len());
        let mut p = start;
        for (_, g) in &oriented {
            out.push(p.clone());
            p += g * 2.0;
        }
        for (_, g) in &oriented {
            out.push(p.clone());
            p -= g * 2.0;
        }
        out
    }

    /// Membership via an LP over the generator weights.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let n = self.dim();
        let k = self.n_generators();
        let r = x - &self.center;
        if k == 0 {
            return Ok(r.amax() <= tol);
        }
        // |ξ_j| ≤ 1 and |Gξ − r| ≤ tol componentwise.
        let mut c = DMatrix::zeros(2 * k + 2 * n, k);
        let mut b = DVector::zeros(2 * k + 2 * n);
        for j in 0..k {
            c[(2 * j, j)] = 1.0;
            c[(2 * j + 1, j)] = -1.0;
            b[2 * j] = 1.0;
            b[2 * j + 1] = 1.0;
        }
        for i in 0..n {
            for j in 0..k {
                c[(2 * k + 2 * i, j)] = self.generators[(i, j)];
                c[(2 * k + 2 * i + 1, j)] = -self.generators[(i, j)];
            }
            b[2 * k + 2 * i] = r[i] + tol;
            b[2 * k + 2 * i + 1] = -r[i] + tol;
        }
        let poly = HPolytope::new(c, b)?;
        let res = lp_solve(&DVector::zeros(k), &poly)?;
        Ok(res.status == LpStatus::Optimal)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonotopeRecord {
    pub center: Vec<f64>,
    /// Generators as columns.
    pub generators: MatrixRecord,
}

impl From<&Zonotope> for ZonotopeRecord {
    fn from(z: &Zonotope) -> Self {
        ZonotopeRecord {
            center: vector_to_vec(&z.center),
            generators: MatrixRecord::from_matrix(&z.generators),
        }
    }
}

impl TryFrom<&ZonotopeRecord> for Zonotope {
    type Error = GeometryError;

    fn try_from(r: &ZonotopeRecord) -> Result<Self> {
        Zonotope::new(vec_to_vector(&r.center)?, r.generators.to_matrix()?)
    }
}
