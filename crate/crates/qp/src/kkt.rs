use nalgebra::DVector;

use crate::spec::{QpSolution, QpSpec, QpStatus};

/// Independent KKT check in the original units:
/// stationarity `‖2GᵀG(U − q0) + Mᵀλ‖∞`, dual feasibility `λ ≥ −tol`,
/// primal feasibility `MU ≤ d + tol` and complementarity `|λᵀ(MU − d)|`.
pub fn kkt_verify(spec: &QpSpec, sol: &QpSolution, tol: f64) -> bool {
    if sol.status != QpStatus::Optimal {
        return false;
    }
    kkt_residuals(spec, &sol.u, &sol.multipliers).within(tol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub dual: f64,
    pub primal: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn within(&self, tol: f64) -> bool {
        self.stationarity <= tol
            && self.dual <= tol
            && self.primal <= tol
            && self.complementarity <= tol
    }
}

/// Each field is the violation of one KKT condition (0 when satisfied).
pub fn kkt_residuals(spec: &QpSpec, u: &DVector<f64>, lambda: &DVector<f64>) -> KktResiduals {
    let grad = spec.gradient(u) + spec.m().tr_mul(lambda);
    let stationarity = grad.amax();
    let dual = lambda.iter().fold(0.0f64, |acc, &l| acc.max(-l));
    let resid = spec.m() * u - spec.d();
    let primal = resid.iter().fold(0.0f64, |acc, &r| acc.max(r));
    let complementarity = lambda.dot(&resid).abs();
    KktResiduals {
        stationarity,
        dual,
        primal,
        complementarity,
    }
}
