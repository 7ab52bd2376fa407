//! Condensed prediction `X = Φx + ΓU` and the factored cost
//! `‖G(U − Kq·x)‖²` (plus a state-only term that is never needed).

use nalgebra::DMatrix;

use crate::error::{ModelError, Result};
use crate::system::{CostWeights, LtiSystem};

/// Stacked prediction matrices for steps `1..=horizon`.
pub fn build_prediction(sys: &LtiSystem, horizon: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if horizon == 0 {
        return Err(ModelError::InvalidHorizon);
    }
    let n = sys.n_states();
    let m = sys.n_inputs();
    let mut phi = DMatrix::zeros(horizon * n, n);
    let mut gamma = DMatrix::zeros(horizon * n, horizon * m);
    // powers[k] = A^k
    let mut powers = vec![DMatrix::identity(n, n)];
    for k in 1..=horizon {
        let next = sys.a() * &powers[k - 1];
        powers.push(next);
    }
    for i in 1..=horizon {
        phi.view_mut(((i - 1) * n, 0), (n, n)).copy_from(&powers[i]);
        for j in 0..i {
            let blk = &powers[i - 1 - j] * sys.b();
            gamma.view_mut(((i - 1) * n, j * m), (n, m)).copy_from(&blk);
        }
    }
    Ok((phi, gamma))
}

/// `(G, Kq)` with `GᵀG = ΓᵀQ̄Γ + R̄` (G upper triangular) and
/// `Kq = −(GᵀG)⁻¹ΓᵀQ̄Φ`, where `Q̄` carries `P` on the last block.
pub fn condense_cost(
    sys: &LtiSystem,
    weights: &CostWeights,
    phi: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = sys.n_states();
    let m = sys.n_inputs();
    if weights.q().nrows() != n {
        return Err(ModelError::Dimension {
            what: "Q",
            expected: n,
            found: weights.q().nrows(),
        });
    }
    if weights.r().nrows() != m {
        return Err(ModelError::Dimension {
            what: "R",
            expected: m,
            found: weights.r().nrows(),
        });
    }
    let horizon = phi.nrows() / n;
    let mut qbar = DMatrix::zeros(horizon * n, horizon * n);
    for i in 0..horizon {
        let w = if i + 1 == horizon { weights.p() } else { weights.q() };
        qbar.view_mut((i * n, i * n), (n, n)).copy_from(w);
    }
    let mut rbar = DMatrix::zeros(horizon * m, horizon * m);
    for i in 0..horizon {
        rbar.view_mut((i * m, i * m), (m, m)).copy_from(weights.r());
    }
    let gq = gamma.transpose() * &qbar;
    let hess = &gq * gamma + rbar;
    let hess = (&hess + hess.transpose()) * 0.5;
    let chol = hess
        .clone()
        .cholesky()
        .ok_or(ModelError::NotPositiveDefinite("R (condensed Hessian)"))?;
    let g = chol.l().transpose();
    let kq = -chol.solve(&(gq * phi));
    Ok((g, kq))
}
