use campc_geometry::{affine_image_ellipsoid, AffineImage, Ellipsoid};
use campc_model::MpcProblem;
use campc_reach::OfflineSets;
use nalgebra::DVector;

use crate::error::{CampcError, Result};

/// Relative inflation of the optimality radius; covers a zero radius and
/// rounding in the shifted warm start.
pub const OPTIMALITY_INFLATION: f64 = 1e-9;

/// Ball in the `G`-metric around `½(Ũ + q(x))` that holds every minimizer
/// of the cost over any convex set containing `Ũ`.
#[derive(Debug, Clone)]
pub struct OptimalityBall {
    pub center: DVector<f64>,
    /// `½‖G(Ũ − q(x))‖`.
    pub raw_radius: f64,
    /// Radius actually used, `raw_radius` plus the inflation.
    pub radius: f64,
    /// `{U : ‖G(U − center)‖ ≤ radius}`.
    pub ellipsoid: Ellipsoid,
}

pub fn optimality_ellipsoid(
    problem: &MpcProblem,
    x: &DVector<f64>,
    u_tilde: &DVector<f64>,
) -> Result<OptimalityBall> {
    if u_tilde.len() != problem.n_decision() {
        return Err(CampcError::Dimension {
            what: "input sequence",
            expected: problem.n_decision(),
            found: u_tilde.len(),
        });
    }
    let q = problem.unconstrained_minimizer(x);
    let g = problem.g();
    let raw_radius = 0.5 * (g * (u_tilde - &q)).norm();
    let radius = raw_radius + OPTIMALITY_INFLATION * (1.0 + (g * u_tilde).norm() + (g * &q).norm());
    let center = (u_tilde + &q) * 0.5;
    let ellipsoid = Ellipsoid::new(g / radius, center.clone())?;
    Ok(OptimalityBall {
        center,
        raw_radius,
        radius,
        ellipsoid,
    })
}

/// The three state-space sets of one prediction step.
#[derive(Debug, Clone)]
pub struct StepSets {
    /// Forward fit shifted to the current state (or to the nominal
    /// trajectory in approximate mode).
    pub forward: Ellipsoid,
    pub backward: Ellipsoid,
    /// Image of the optimality ball; `regularized` flags a rank-deficient
    /// prediction block.
    pub optimality: Option<AffineImage>,
}

/// Sets for step `1 ≤ step < N`. With `nominal = Some(Ũ)` the forward set is
/// the increment-reach fit centered on the nominal prediction.
pub fn step_sets(
    problem: &MpcProblem,
    offline: &OfflineSets,
    x: &DVector<f64>,
    ball: Option<&OptimalityBall>,
    step: usize,
    nominal: Option<&DVector<f64>>,
) -> Result<StepSets> {
    let horizon = problem.horizon();
    if step == 0 || step >= horizon {
        return Err(CampcError::Dimension {
            what: "step (1..N-1)",
            expected: horizon - 1,
            found: step,
        });
    }
    let free = problem.phi_block(step) * x;
    let (fit, shift) = match nominal {
        None => (&offline.forward[step - 1], free.clone()),
        Some(u) => {
            let delta = offline.forward_delta.as_ref().ok_or(CampcError::MissingDelta)?;
            (&delta.fits[step - 1], &free + problem.gamma_block(step) * u)
        }
    };
    let forward = Ellipsoid::new(fit.shape().clone(), fit.center() + shift)?;
    let backward = offline.backward[step - 1].clone();
    let optimality = match ball {
        Some(b) => Some(affine_image_ellipsoid(&problem.gamma_block(step), &free, &b.ellipsoid)?),
        None => None,
    };
    Ok(StepSets {
        forward,
        backward,
        optimality,
    })
}
