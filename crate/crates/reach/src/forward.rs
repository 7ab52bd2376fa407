use campc_geometry::zonotope::MAX_ENUMERATED_GENERATORS;
use campc_geometry::{mvee, Ellipsoid, HPolytope, Zonotope};
use campc_model::LtiSystem;
use nalgebra::{DMatrix, DVector};

use crate::error::{ReachError, Result};

/// MVEE optimality tolerance (log-volume gap about 1e-4 at most); containment
/// itself is exact regardless.
pub const FIT_TOL: f64 = 1e-4;

/// Reachable sets from the origin, `H_{i+1} = A H_i + B U`, `H_0 = {0}`,
/// for `i = 1..=steps`. `U` must be an axis-aligned box.
pub fn forward_reach(sys: &LtiSystem, input_set: &HPolytope, steps: usize) -> Result<Vec<Zonotope>> {
    let n = sys.n_states();
    if input_set.dim() != sys.n_inputs() {
        return Err(ReachError::Dimension {
            what: "input set",
            expected: sys.n_inputs(),
            found: input_set.dim(),
        });
    }
    let (lo, hi) = input_set.as_box().ok_or(ReachError::NonZonotopicInput)?;
    let input = Zonotope::from_box(&lo, &hi).map_err(ReachError::at(0))?;
    let pushed = input.linear_map(sys.b()).map_err(ReachError::at(1))?;
    let mut out = Vec::with_capacity(steps);
    let mut cur = Zonotope::point(DVector::zeros(n)).map_err(ReachError::at(0))?;
    for step in 1..=steps {
        let next = if step == 1 {
            pushed.clone()
        } else {
            cur.linear_map(sys.a())
                .and_then(|z| z.minkowski_sum(&pushed))
                .map_err(ReachError::at(step))?
        };
        out.push(next.clone());
        cur = next;
    }
    Ok(out)
}

/// Bounding box of a general input set, usable as an outer input box for
/// `forward_reach`.
pub fn outer_input_box(input_set: &HPolytope) -> Result<HPolytope> {
    let (lo, hi) = input_set.bounding_box().map_err(ReachError::at(0))?;
    HPolytope::from_box(&lo, &hi).map_err(ReachError::at(0))
}

#[derive(Debug, Clone)]
pub struct ForwardFit {
    pub ellipsoid: Ellipsoid,
    /// Built from the covariance bound instead of the vertex MVEE.
    pub from_bound: bool,
}

/// Outer ellipsoid per zonotope: MVEE of the vertices when they can be
/// enumerated, else `Σ = k Σ_j g_j g_jᵀ` (Cauchy-Schwarz, k generators).
pub fn fit_forward(zonotopes: &[Zonotope]) -> Result<Vec<ForwardFit>> {
    zonotopes
        .iter()
        .enumerate()
        .map(|(i, z)| fit_zonotope(z).map_err(ReachError::at(i + 1)))
        .collect()
}

fn fit_zonotope(z: &Zonotope) -> campc_geometry::Result<ForwardFit> {
    let enumerable = z.dim() <= 2 || z.n_generators() <= MAX_ENUMERATED_GENERATORS;
    if enumerable {
        let pts = z.vertices()?;
        let e = mvee(&pts, FIT_TOL)?;
        return Ok(ForwardFit {
            ellipsoid: e,
            from_bound: false,
        });
    }
    let g = z.generators();
    let k = g.ncols() as f64;
    let sigma: DMatrix<f64> = g * g.transpose() * k;
    let (e, _) = Ellipsoid::from_covariance(&sigma, z.center().clone())?;
    Ok(ForwardFit {
        ellipsoid: e,
        from_bound: true,
    })
}

/// Largest gauge excess `‖L(v − q)‖ − 1` over the zonotope's vertices.
pub fn forward_certificate(z: &Zonotope, e: &Ellipsoid) -> Result<f64> {
    let pts = z.vertices().map_err(ReachError::at(0))?;
    Ok(pts
        .iter()
        .map(|p| e.gauge(p) - 1.0)
        .fold(f64::NEG_INFINITY, f64::max))
}
