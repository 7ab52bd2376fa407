use campc_geometry::{inscribed_ellipsoid, mvee, project_out, support_radius, Ellipsoid, HPolytope};
use campc_model::LtiSystem;
use nalgebra::{DMatrix, DVector};

use crate::error::{ReachError, Result};
use crate::forward::FIT_TOL;

/// Sets `H_i` for `i = 1..=steps` (returned in that order, the last being
/// the terminal set): states at prediction step `i` from which the terminal
/// set is reachable at step `steps` with admissible inputs.
///
/// `H_{i−1}` is the projection onto `x` of
/// `{(x, u) : C_i(Ax + Bu) ≤ d_i, Gu ≤ h}`, pruned.
pub fn backward_reach(
    sys: &LtiSystem,
    input_set: &HPolytope,
    terminal: &HPolytope,
    steps: usize,
) -> Result<Vec<HPolytope>> {
    let n = sys.n_states();
    let m = sys.n_inputs();
    if terminal.dim() != n {
        return Err(ReachError::Dimension {
            what: "terminal set",
            expected: n,
            found: terminal.dim(),
        });
    }
    if input_set.dim() != m {
        return Err(ReachError::Dimension {
            what: "input set",
            expected: m,
            found: input_set.dim(),
        });
    }
    if steps == 0 {
        return Ok(Vec::new());
    }
    let mut out = vec![terminal.clone()];
    for step in (1..steps).rev() {
        let next = out.last().expect("seeded with the terminal set");
        let prev = predecessor(sys, input_set, next).map_err(ReachError::at(step))?;
        if prev.is_empty().map_err(ReachError::at(step))? {
            return Err(ReachError::EmptyBackward { step });
        }
        out.push(prev);
    }
    out.reverse();
    Ok(out)
}

/// One-step predecessor `{x : ∃u ∈ U, Ax + Bu ∈ target}`.
pub fn predecessor(
    sys: &LtiSystem,
    input_set: &HPolytope,
    target: &HPolytope,
) -> campc_geometry::Result<HPolytope> {
    let n = sys.n_states();
    let m = sys.n_inputs();
    let k = target.n_rows();
    let p = input_set.n_rows();
    let mut c = DMatrix::zeros(k + p, n + m);
    let mut d = DVector::zeros(k + p);
    let ca = target.coefficients() * sys.a();
    let cb = target.coefficients() * sys.b();
    c.view_mut((0, 0), (k, n)).copy_from(&ca);
    c.view_mut((0, n), (k, m)).copy_from(&cb);
    d.rows_mut(0, k).copy_from(target.offsets());
    c.view_mut((k, n), (p, m)).copy_from(input_set.coefficients());
    d.rows_mut(k, p).copy_from(input_set.offsets());
    let lifted = HPolytope::new(c, d)?;
    let inputs: Vec<usize> = (n..n + m).collect();
    project_out(&lifted, &inputs)
}

#[derive(Debug, Clone)]
pub struct BackwardFit {
    /// Maximum-volume inscribed ellipsoid.
    pub inner: Ellipsoid,
    /// Enclosing ellipsoid; this is the one that may be used for removal.
    pub outer: Ellipsoid,
    /// The outer fit came from the bounding box rather than the vertices.
    pub outer_from_box: bool,
}

/// Inner and outer ellipsoids of each polytope; errors carry the 1-based
/// position in `polytopes`.
pub fn fit_backward(polytopes: &[HPolytope]) -> Result<Vec<BackwardFit>> {
    polytopes
        .iter()
        .enumerate()
        .map(|(i, p)| fit_polytope(p).map_err(ReachError::at(i + 1)))
        .collect()
}

fn fit_polytope(p: &HPolytope) -> campc_geometry::Result<BackwardFit> {
    let inner = inscribed_ellipsoid(p)?;
    let (outer, outer_from_box) = if p.dim() <= 3 {
        (mvee(&p.vertices()?, FIT_TOL)?, false)
    } else {
        (box_ellipsoid(p)?, true)
    };
    Ok(BackwardFit {
        inner,
        outer,
        outer_from_box,
    })
}

/// The box `[lo, hi]` lies in the ellipsoid with semi-axes `√n·(hi − lo)/2`.
fn box_ellipsoid(p: &HPolytope) -> campc_geometry::Result<Ellipsoid> {
    let (lo, hi) = p.bounding_box()?;
    let n = p.dim() as f64;
    let center = (&lo + &hi) * 0.5;
    let half = (&hi - &lo) * 0.5;
    let sigma = DMatrix::from_diagonal(&half.map(|w| n * w * w));
    Ok(Ellipsoid::from_covariance(&sigma, center)?.0)
}

/// Worst row excess `‖cL⁻¹‖ − (b − c·q)`; the ellipsoid lies inside the
/// polytope iff this is `≤ 0`.
pub fn inner_certificate(p: &HPolytope, e: &Ellipsoid) -> f64 {
    (0..p.n_rows())
        .map(|j| {
            let c = p.row(j);
            support_radius(&c, e) - (p.offset(j) - c.dot(e.center()))
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest gauge excess of the polytope's vertices in `e` (dims 1–3).
pub fn outer_certificate(p: &HPolytope, e: &Ellipsoid) -> Result<f64> {
    let verts = p.vertices().map_err(ReachError::at(0))?;
    Ok(verts
        .iter()
        .map(|v| e.gauge(v) - 1.0)
        .fold(f64::NEG_INFINITY, f64::max))
}
