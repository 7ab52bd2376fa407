use campc_model::MpcProblem;
use nalgebra::DVector;

use crate::error::Result;
use crate::online::OnlineContext;
use crate::removal::{IndexSets, Source};
use crate::sets::{step_sets, OptimalityBall};

/// Tolerance for set membership of the minimizer (gauge excess) and for
/// constraint violation of the realized prediction.
pub const AUDIT_TOL: f64 = 1e-7;

/// Outcome of the runtime checks on one step. Failures are data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepAudit {
    /// Predicted states lie in every set used for removal, and the minimizer
    /// lies in the optimality ball.
    pub c1: bool,
    /// The minimizer satisfies every original state row.
    pub c2: bool,
    /// Every removed row is re-certified by the source that removed it.
    pub c3: bool,
    /// Largest gauge excess seen by C1.
    pub c1_worst: f64,
    /// Largest raw row violation seen by C2.
    pub c2_worst: f64,
    /// `(step, row)` pairs whose certificate failed.
    pub c3_failures: Vec<(usize, usize)>,
}

impl StepAudit {
    pub fn passed(&self) -> bool {
        self.c1 && self.c2 && self.c3
    }
}

/// Audit for a step with nothing removed and no sets in use.
pub fn vacuous_audit(problem: &MpcProblem, x: &DVector<f64>, u_seq: &DVector<f64>) -> StepAudit {
    let c2_worst = state_violation(problem, x, u_seq);
    StepAudit {
        c1: true,
        c2: c2_worst <= AUDIT_TOL,
        c3: true,
        c1_worst: 0.0,
        c2_worst,
        c3_failures: Vec::new(),
    }
}

fn state_violation(problem: &MpcProblem, x: &DVector<f64>, u_seq: &DVector<f64>) -> f64 {
    let n = problem.n_states();
    let pred = problem.predict(x, u_seq);
    problem
        .state_sets()
        .iter()
        .enumerate()
        .map(|(i, set)| set.max_violation(&pred.rows(i * n, n).into_owned()))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// C1/C2/C3 for the minimizer `u_seq` of the reduced problem built from
/// `index`. The C3 certificate for the optimality source uses the exact
/// support of the image of the ball, not its regularized ellipsoid.
pub fn audit_step(
    ctx: &OnlineContext<'_>,
    x: &DVector<f64>,
    ball: Option<&OptimalityBall>,
    nominal: Option<&DVector<f64>>,
    index: &IndexSets,
    u_seq: &DVector<f64>,
) -> Result<StepAudit> {
    let p = ctx.problem();
    let n = p.n_states();
    let on = ctx.options().sources;
    let pred = p.predict(x, u_seq);
    let mut out = vacuous_audit(p, x, u_seq);

    let mut worst = f64::NEG_INFINITY;
    if let Some(b) = ball {
        worst = worst.max(b.ellipsoid.gauge(u_seq) - 1.0);
    }
    for step in 1..p.horizon() {
        let sets = step_sets(p, ctx.offline(), x, ball, step, nominal)?;
        let xi = pred.rows((step - 1) * n, n).into_owned();
        if on.forward {
            worst = worst.max(sets.forward.gauge(&xi) - 1.0);
        }
        if on.backward {
            worst = worst.max(sets.backward.gauge(&xi) - 1.0);
        }
        if let (true, Some(img)) = (on.optimality, &sets.optimality) {
            worst = worst.max(img.ellipsoid.gauge(&xi) - 1.0);
        }

        let Some(si) = index.steps.get(step - 1) else { continue };
        let set = p.state_set(step);
        let free = p.phi_block(step) * x;
        for &(j, src) in &si.removed {
            let c = set.row(j);
            let b = set.offset(j);
            let support = match src {
                Source::Forward => c.dot(sets.forward.center()) + campc_geometry::support_radius(&c, &sets.forward),
                Source::Backward => c.dot(sets.backward.center()) + campc_geometry::support_radius(&c, &sets.backward),
                Source::Optimality => match ball {
                    Some(b) => {
                        let dir = p.rows_in_inputs(step).row(j) * p.g_inv();
                        c.dot(&free) + (p.rows_in_inputs(step).row(j) * &b.center)[0] + b.radius * dir.norm()
                    }
                    None => f64::INFINITY,
                },
            };
            if support > b + 1e-12 * (1.0 + b.abs()) {
                out.c3_failures.push((step, j));
            }
        }
    }
    if let Some(last) = index.steps.last() {
        if !last.removed.is_empty() {
            out.c3_failures.extend(last.removed.iter().map(|&(j, _)| (p.horizon(), j)));
        }
    }
    out.c1_worst = worst.max(0.0);
    out.c1 = worst <= AUDIT_TOL;
    out.c3 = out.c3_failures.is_empty();
    Ok(out)
}
