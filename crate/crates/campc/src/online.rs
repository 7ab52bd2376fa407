use std::time::{Duration, Instant};

use campc_geometry::HPolytope;
use campc_model::{MpcProblem, TerminalLaw};
use campc_qp::{assemble_full_qp, assemble_reduced_qp, solve_qp, InputBand, QpSolution, QpStatus};
use campc_reach::OfflineSets;
use nalgebra::DVector;

use crate::audit::{audit_step, StepAudit};
use crate::error::{CampcError, Result};
use crate::removal::{IndexSets, RemovalReport, RemovalRule, Source, StepIndex};
use crate::sets::{optimality_ellipsoid, OptimalityBall};

/// Allowed raw violation of a warm start, relative to the data scale.
const WARM_TOL: f64 = 1e-8;

/// Which removal sources are consulted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSwitch {
    pub forward: bool,
    pub backward: bool,
    pub optimality: bool,
}

impl Default for SourceSwitch {
    fn default() -> Self {
        SourceSwitch {
            forward: true,
            backward: true,
            optimality: true,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct OnlineOptions {
    pub rule: RemovalRule,
    pub sources: SourceSwitch,
    /// Run the C1/C2/C3 audit after every reduced step.
    pub verify: bool,
}

/// State-independent parts of the removal tests for one step.
#[derive(Debug, Clone)]
struct StepTable {
    /// `b − c·q` for the forward fit from the origin.
    fwd_base: Vec<f64>,
    fwd_norm: Vec<f64>,
    delta_base: Option<Vec<f64>>,
    delta_norm: Option<Vec<f64>>,
    /// The backward test does not depend on the state at all.
    bwd_covers: Vec<bool>,
    /// `‖c Γ_i G⁻¹‖`.
    opt_dir: Vec<f64>,
    offsets: Vec<f64>,
}

/// Result of one receding-horizon step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub u_apply: DVector<f64>,
    pub solution: QpSolution,
    pub index: IndexSets,
    pub report: RemovalReport,
    /// Optimality ball used for removal, if any.
    pub ball: Option<OptimalityBall>,
    /// Time spent building the index sets.
    pub sets_time: Duration,
    /// Time spent assembling and solving the QP.
    pub qp_time: Duration,
    /// The reduced QP was infeasible and the full QP was solved instead.
    pub fallback: bool,
    pub audit: Option<StepAudit>,
}

/// Problem, offline sets and the derived lookup tables for online steps.
#[derive(Debug, Clone)]
pub struct OnlineContext<'a> {
    problem: &'a MpcProblem,
    offline: &'a OfflineSets,
    options: OnlineOptions,
    tables: Vec<StepTable>,
    delta: Option<HPolytope>,
}

impl<'a> OnlineContext<'a> {
    pub fn new(problem: &'a MpcProblem, offline: &'a OfflineSets, options: OnlineOptions) -> Result<Self> {
        let expected = problem.checksum();
        if offline.problem_checksum != expected || offline.horizon != problem.horizon() {
            return Err(CampcError::OfflineMismatch {
                expected,
                found: offline.problem_checksum.clone(),
            });
        }
        let delta = match &offline.forward_delta {
            Some(d) => {
                if d.delta.max_violation(&DVector::zeros(problem.n_inputs())) > 0.0 {
                    return Err(CampcError::DeltaExcludesOrigin);
                }
                Some(d.delta.clone())
            }
            None => None,
        };
        let rule = options.rule;
        let tables = (1..problem.horizon())
            .map(|step| {
                let set = problem.state_set(step);
                let k = step - 1;
                let base = |center: &DVector<f64>| -> Vec<f64> {
                    let cq = set.coefficients() * center;
                    (0..set.n_rows()).map(|j| set.offset(j) - cq[j]).collect()
                };
                let bwd_base = base(offline.backward[k].center());
                StepTable {
                    fwd_base: base(offline.forward[k].center()),
                    fwd_norm: offline.norms.forward[k].clone(),
                    delta_base: offline.forward_delta.as_ref().map(|d| base(d.fits[k].center())),
                    delta_norm: offline.norms.forward_delta.as_ref().map(|n| n[k].clone()),
                    bwd_covers: offline.norms.backward[k]
                        .iter()
                        .zip(&bwd_base)
                        .map(|(&r, &s)| rule.covers(r, s))
                        .collect(),
                    opt_dir: offline.norms.optimality[k].clone(),
                    offsets: set.offsets().iter().copied().collect(),
                }
            })
            .collect();
        Ok(OnlineContext {
            problem,
            offline,
            options,
            tables,
            delta,
        })
    }

    pub fn problem(&self) -> &'a MpcProblem {
        self.problem
    }

    pub fn offline(&self) -> &'a OfflineSets {
        self.offline
    }

    pub fn options(&self) -> &OnlineOptions {
        &self.options
    }

    pub fn delta(&self) -> Option<&HPolytope> {
        self.delta.as_ref()
    }

    /// Index sets from the precomputed tables. `nominal` switches the forward
    /// source to the increment-reach fits around the nominal prediction.
    pub fn index_sets(
        &self,
        x: &DVector<f64>,
        ball: Option<&OptimalityBall>,
        nominal: Option<&DVector<f64>>,
    ) -> Result<IndexSets> {
        let p = self.problem;
        let horizon = p.horizon();
        if nominal.is_some() && self.delta.is_none() {
            return Err(CampcError::MissingDelta);
        }
        let rule = self.options.rule;
        let on = self.options.sources;
        let mut steps = Vec::with_capacity(horizon);
        for step in 1..horizon {
            let t = &self.tables[step - 1];
            let total = t.offsets.len();
            let free = p.rows_in_state(step) * x;
            let shift = nominal.map(|u| p.rows_in_inputs(step) * u);
            let opt = ball.map(|b| (p.rows_in_inputs(step) * &b.center, b.radius));
            let mut out = StepIndex {
                total,
                ..Default::default()
            };
            for j in 0..total {
                let fwd = on.forward
                    && match &shift {
                        None => rule.covers(t.fwd_norm[j], t.fwd_base[j] - free[j]),
                        Some(s) => {
                            let base = t.delta_base.as_ref().expect("checked above");
                            let norm = t.delta_norm.as_ref().expect("checked above");
                            rule.covers(norm[j], base[j] - free[j] - s[j])
                        }
                    };
                let hit = if fwd {
                    Some(Source::Forward)
                } else if on.backward && t.bwd_covers[j] {
                    Some(Source::Backward)
                } else if on.optimality
                    && opt.as_ref().is_some_and(|(cc, rho)| {
                        rule.covers(rho * t.opt_dir[j], t.offsets[j] - free[j] - cc[j])
                    })
                {
                    Some(Source::Optimality)
                } else {
                    None
                };
                match hit {
                    Some(s) => out.removed.push((j, s)),
                    None => out.retained.push(j),
                }
            }
            steps.push(out);
        }
        steps.push(StepIndex::all_retained(p.terminal_set().n_rows(), true));
        Ok(IndexSets { steps })
    }

    /// Exact ca-MPC step. Without a warm start the optimality source is off.
    pub fn exact_step(&self, x: &DVector<f64>, warm: Option<&DVector<f64>>) -> Result<StepOutcome> {
        self.reduced_step(x, warm, None)
    }

    /// Approximate ca-MPC step: the problem gains the band `u_t − ũ_t ∈ δU`
    /// and is solved exactly with respect to that augmented problem.
    pub fn approx_step(&self, x: &DVector<f64>, u_tilde: &DVector<f64>) -> Result<StepOutcome> {
        let delta = self.delta.as_ref().ok_or(CampcError::MissingDelta)?;
        let band = InputBand {
            nominal: u_tilde.clone(),
            delta: delta.clone(),
        };
        self.reduced_step(x, Some(u_tilde), Some(&band))
    }

    fn reduced_step(
        &self,
        x: &DVector<f64>,
        warm: Option<&DVector<f64>>,
        band: Option<&InputBand>,
    ) -> Result<StepOutcome> {
        let p = self.problem;
        self.check_state(x)?;
        let clock = Instant::now();
        let mut use_ball = self.options.sources.optimality && warm.is_some();
        if let Some(w) = warm {
            let scale = 1.0 + x.amax() + w.amax();
            if p.max_violation(x, w) > WARM_TOL * scale {
                log::warn!("warm start violates the constraints; optimality source disabled for this step");
                use_ball = false;
            }
        }
        let ball = match warm {
            Some(w) if use_ball => Some(optimality_ellipsoid(p, x, w)?),
            _ => None,
        };
        let nominal = band.map(|b| &b.nominal);
        let index = self.index_sets(x, ball.as_ref(), nominal)?;
        let sets_time = clock.elapsed();

        let clock = Instant::now();
        let spec = assemble_reduced_qp(p, x, &index.retained_lists(), band)?;
        let mut solution = solve_qp(&spec, warm)?;
        let mut fallback = false;
        match solution.status {
            QpStatus::Optimal => {}
            QpStatus::Infeasible => {
                let full = assemble_full_qp(p, x, band)?;
                let full_sol = solve_qp(&full, warm)?;
                match full_sol.status {
                    QpStatus::Optimal => {
                        log::warn!("reduced QP infeasible but the full QP is not; using the full solution");
                        solution = full_sol;
                        fallback = true;
                    }
                    QpStatus::Infeasible => return Err(CampcError::InfeasibleState),
                    QpStatus::IterationLimit => {
                        return Err(CampcError::SolverFailure("iteration limit".into()))
                    }
                }
            }
            QpStatus::IterationLimit => return Err(CampcError::SolverFailure("iteration limit".into())),
        }
        let qp_time = clock.elapsed();

        let audit = if self.options.verify {
            Some(audit_step(self, x, ball.as_ref(), nominal, &index, &solution.u)?)
        } else {
            None
        };
        Ok(StepOutcome {
            u_apply: p.input_at(&solution.u, 0),
            report: index.report(),
            index,
            solution,
            ball,
            sets_time,
            qp_time,
            fallback,
            audit,
        })
    }

    /// The original problem (optionally with the band), no removal.
    pub fn full_step(
        &self,
        x: &DVector<f64>,
        warm: Option<&DVector<f64>>,
        band: Option<&InputBand>,
    ) -> Result<StepOutcome> {
        let p = self.problem;
        self.check_state(x)?;
        let index = IndexSets {
            steps: p
                .state_sets()
                .iter()
                .enumerate()
                .map(|(i, s)| StepIndex::all_retained(s.n_rows(), i + 1 == p.horizon()))
                .collect(),
        };
        let clock = Instant::now();
        let spec = assemble_full_qp(p, x, band)?;
        let solution = solve_qp(&spec, warm)?;
        let qp_time = clock.elapsed();
        match solution.status {
            QpStatus::Optimal => {}
            QpStatus::Infeasible => return Err(CampcError::InfeasibleState),
            QpStatus::IterationLimit => return Err(CampcError::SolverFailure("iteration limit".into())),
        }
        Ok(StepOutcome {
            u_apply: p.input_at(&solution.u, 0),
            report: index.report(),
            index,
            solution,
            ball: None,
            sets_time: Duration::ZERO,
            qp_time,
            fallback: false,
            audit: None,
        })
    }

    fn check_state(&self, x: &DVector<f64>) -> Result<()> {
        let n = self.problem.n_states();
        if x.len() != n {
            return Err(CampcError::Dimension {
                what: "state",
                expected: n,
                found: x.len(),
            });
        }
        Ok(())
    }
}

/// `[u*_1, …, u*_{N−1}, K_T x*_N]`: the previous solution shifted by one
/// step with the terminal law appended.
pub fn warm_start(prev: &DVector<f64>, terminal_state: &DVector<f64>, law: &TerminalLaw) -> DVector<f64> {
    let m = law.gain().nrows();
    let len = prev.len();
    let mut out = DVector::zeros(len);
    out.rows_mut(0, len - m).copy_from(&prev.rows(m, len - m));
    out.rows_mut(len - m, m).copy_from(&law.input(terminal_state));
    out
}

/// Receding-horizon variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Full,
    Exact,
    Approximate,
}

/// Closed-loop controller: owns the previous solution for warm starts.
#[derive(Debug, Clone)]
pub struct Controller<'a> {
    ctx: OnlineContext<'a>,
    variant: Variant,
    previous: Option<(DVector<f64>, DVector<f64>)>,
}

impl<'a> Controller<'a> {
    pub fn new(ctx: OnlineContext<'a>, variant: Variant) -> Result<Self> {
        if variant == Variant::Approximate && ctx.delta.is_none() {
            return Err(CampcError::MissingDelta);
        }
        Ok(Controller {
            ctx,
            variant,
            previous: None,
        })
    }

    pub fn context(&self) -> &OnlineContext<'a> {
        &self.ctx
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn reset(&mut self) {
        self.previous = None;
    }

    /// Shifted warm start from the previous step, if there was one.
    pub fn warm_start(&self) -> Option<DVector<f64>> {
        let (u, x) = self.previous.as_ref()?;
        let p = self.ctx.problem;
        let law = p.terminal_law()?;
        let pred = p.predict(x, u);
        let n = p.n_states();
        let terminal = pred.rows((p.horizon() - 1) * n, n).into_owned();
        Some(warm_start(u, &terminal, law))
    }

    pub fn step(&mut self, x: &DVector<f64>) -> Result<StepOutcome> {
        let warm = self.warm_start();
        let out = match (self.variant, &warm) {
            (Variant::Full, _) => self.ctx.full_step(x, warm.as_ref(), None)?,
            (Variant::Exact, _) | (Variant::Approximate, None) => self.ctx.exact_step(x, warm.as_ref())?,
            (Variant::Approximate, Some(w)) => self.ctx.approx_step(x, w)?,
        };
        self.previous = Some((out.solution.u.clone(), x.clone()));
        Ok(out)
    }
}
