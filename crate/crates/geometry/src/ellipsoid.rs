//! Ellipsoids `E(L, q) = {x : ‖L(x − q)‖₂ ≤ 1}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::record::{vec_to_vector, vector_to_vec, MatrixRecord};

/// Relative floor for covariance eigenvalues (squared) before a direction
/// counts as degenerate.
pub const DEGENERATE_REL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    shape: DMatrix<f64>,
    shape_inv: DMatrix<f64>,
    center: DVector<f64>,
}

impl Ellipsoid {
    pub fn new(shape: DMatrix<f64>, center: DVector<f64>) -> Result<Self> {
        let n = center.len();
        if n == 0 {
            return Err(GeometryError::ZeroDimension);
        }
        if shape.nrows() != n || shape.ncols() != n {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                found: shape.nrows(),
            });
        }
        if shape.iter().chain(center.iter()).any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("ellipsoid"));
        }
        let shape_inv = shape.clone().try_inverse().ok_or(GeometryError::Singular)?;
        if shape_inv.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::Singular);
        }
        Ok(Ellipsoid {
            shape,
            shape_inv,
            center,
        })
    }

    pub fn ball(center: DVector<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(GeometryError::Singular);
        }
        let n = center.len();
        Self::new(DMatrix::identity(n, n) / radius, center)
    }

    /// Builds `{q + y : yᵀΣ⁻¹y ≤ 1}`. Eigenvalues of `Σ` below
    /// `(DEGENERATE_REL·scale)²` are raised to that floor (outer-safe); the
    /// flag reports whether that happened.
    pub fn from_covariance(sigma: &DMatrix<f64>, center: DVector<f64>) -> Result<(Self, bool)> {
        let n = center.len();
        if sigma.nrows() != n || sigma.ncols() != n {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                found: sigma.nrows(),
            });
        }
        if sigma.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("covariance"));
        }
        let sym = (sigma + sigma.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let max_ev = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let scale = if max_ev > 0.0 { max_ev.sqrt() } else { 1.0 };
        let floor = (DEGENERATE_REL * scale).powi(2);
        let mut regularized = false;
        let mut l_inv = DMatrix::zeros(n, n);
        let mut l = DMatrix::zeros(n, n);
        for k in 0..n {
            let mut ev = eig.eigenvalues[k];
            if ev < floor {
                ev = floor;
                regularized = true;
            }
            let s = ev.sqrt();
            let v = eig.eigenvectors.column(k);
            l_inv.set_column(k, &(v * s));
            l.set_row(k, &(v.transpose() / s));
        }
        Ok((
            Ellipsoid {
                shape: l,
                shape_inv: l_inv,
                center,
            },
            regularized,
        ))
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `L`.
    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    /// `L⁻¹`; the ellipsoid is the image of the unit ball under `y ↦ L⁻¹y + q`.
    pub fn shape_inv(&self) -> &DMatrix<f64> {
        &self.shape_inv
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    /// `Σ = L⁻¹L⁻ᵀ`.
    pub fn covariance(&self) -> DMatrix<f64> {
        &self.shape_inv * self.shape_inv.transpose()
    }

    /// `‖L(x − q)‖₂`; at most 1 inside.
    pub fn gauge(&self, x: &DVector<f64>) -> f64 {
        (&self.shape * (x - &self.center)).norm()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.gauge(x) <= 1.0 + tol
    }

    /// Euclidean distance from `x` to the ellipsoid (0 inside).
    pub fn distance(&self, x: &DVector<f64>) -> f64 {
        if self.gauge(x) <= 1.0 {
            return 0.0;
        }
        let eig = self.covariance().symmetric_eigen();
        let n = self.dim();
        let z = eig.eigenvectors.transpose() * (x - &self.center);
        let ax: Vec<f64> = (0..n).map(|k| eig.eigenvalues[k].max(0.0)).collect();
        // Closest point p_k = a_k z_k / (a_k + t) with a_k = σ_k², t ≥ 0 the root
        // of Σ a_k z_k² / (a_k + t)² = 1.
        let f = |t: f64| -> f64 {
            (0..n)
                .map(|k| ax[k] * z[k] * z[k] / ((ax[k] + t) * (ax[k] + t)))
                .sum::<f64>()
        };
        let amax = ax.iter().copied().fold(0.0, f64::max);
        let mut lo = 0.0;
        let mut hi = amax.sqrt() * z.norm() + 1e-300;
        while f(hi) > 1.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = hi;
        (0..n)
            .map(|k| {
                let pk = ax[k] * z[k] / (ax[k] + t);
                (z[k] - pk).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `x` lies within Euclidean distance `delta` of the ellipsoid.
    pub fn contains_within(&self, x: &DVector<f64>, delta: f64) -> bool {
        self.distance(x) <= delta
    }

    /// Point `q + L⁻¹u` for `u` on (or in) the unit ball.
    pub fn point(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.center + &self.shape_inv * u
    }

    /// Uniform scaling about the center by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Ellipsoid::new(&self.shape / factor, self.center.clone())
    }

    /// `log det L⁻¹`, the log-volume up to the unit-ball constant.
    pub fn log_volume(&self) -> f64 {
        self.shape_inv.determinant().abs().ln()
    }
}

fn check_row(c: &DVector<f64>, e: &Ellipsoid) -> Result<()> {
    if c.len() != e.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: e.dim(),
            found: c.len(),
        });
    }
    Ok(())
}

/// `‖cL⁻¹‖₂`, the half-width of the ellipsoid along `c`.
pub fn support_radius(c: &DVector<f64>, e: &Ellipsoid) -> f64 {
    (e.shape_inv.transpose() * c).norm()
}

/// `max_{x∈E} c·x = c·q + ‖cL⁻¹‖₂`.
pub fn ellipsoid_support(c: &DVector<f64>, e: &Ellipsoid) -> Result<f64> {
    check_row(c, e)?;
    Ok(c.dot(&e.center) + support_radius(c, e))
}

/// Whether `E ⊆ {x : c·x ≤ b}`, tested as `‖cL⁻¹‖₂ ≤ b − c·q`.
pub fn halfspace_covers_ellipsoid(c: &DVector<f64>, b: f64, e: &Ellipsoid) -> Result<bool> {
    check_row(c, e)?;
    Ok(support_radius(c, e) <= b - c.dot(&e.center))
}

#[derive(Debug, Clone)]
pub struct AffineImage {
    pub ellipsoid: Ellipsoid,
    /// The image was degenerate and had to be inflated.
    pub regularized: bool,
}

/// `{Mx + t : x ∈ E}` via `Σ' = MΣMᵀ`, regularized if `M` loses rank.
pub fn affine_image_ellipsoid(
    m: &DMatrix<f64>,
    t: &DVector<f64>,
    e: &Ellipsoid,
) -> Result<AffineImage> {
    if m.ncols() != e.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: e.dim(),
            found: m.ncols(),
        });
    }
    if t.len() != m.nrows() {
        return Err(GeometryError::DimensionMismatch {
            expected: m.nrows(),
            found: t.len(),
        });
    }
    let half = m * &e.shape_inv;
    let sigma = &half * half.transpose();
    let center = m * &e.center + t;
    let (ellipsoid, regularized) = Ellipsoid::from_covariance(&sigma, center)?;
    Ok(AffineImage {
        ellipsoid,
        regularized,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidRecord {
    /// Shape matrix `L`.
    pub l: MatrixRecord,
    /// Center `q`.
    pub q: Vec<f64>,
}

impl From<&Ellipsoid> for EllipsoidRecord {
    fn from(e: &Ellipsoid) -> Self {
        EllipsoidRecord {
            l: MatrixRecord::from_matrix(&e.shape),
            q: vector_to_vec(&e.center),
        }
    }
}

impl TryFrom<&EllipsoidRecord> for Ellipsoid {
    type Error = GeometryError;

    fn try_from(r: &EllipsoidRecord) -> Result<Self> {
        Ellipsoid::new(r.l.to_matrix()?, vec_to_vector(&r.q)?)
    }
}
