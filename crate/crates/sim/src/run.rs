use std::io::Write;
use std::time::Duration;

use campc::{
    vacuous_audit, CampcError, Controller, OnlineContext, OnlineOptions, RemovalRule, Source,
    StepAudit, Variant,
};
use campc_geometry::HPolytope;
use campc_model::MpcProblem;
use campc_reach::OfflineSets;
use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Result, SimError};

pub fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::Full => "full",
        Variant::Exact => "exact",
        Variant::Approximate => "approx",
    }
}

pub fn parse_variant(s: &str) -> Option<Variant> {
    match s {
        "full" => Some(Variant::Full),
        "exact" => Some(Variant::Exact),
        "approx" | "approximate" => Some(Variant::Approximate),
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub variant: Variant,
    pub x0: DVector<f64>,
    pub steps: usize,
    /// Input-increment set; required for, and only for, the approximate variant.
    pub delta: Option<HPolytope>,
    /// Record the C1/C2/C3 audit at every step.
    pub verify: bool,
    /// Recorded for provenance; the closed loop itself is deterministic.
    pub seed: u64,
    pub rule: RemovalRule,
}

impl RunConfig {
    pub fn new(variant: Variant, x0: DVector<f64>, steps: usize) -> Self {
        RunConfig {
            variant,
            x0,
            steps,
            delta: None,
            verify: false,
            seed: 0,
            rule: RemovalRule::Signed,
        }
    }

    fn validate(&self, problem: &MpcProblem, offline: &OfflineSets) -> Result<()> {
        if self.steps == 0 {
            return Err(SimError::Config("steps must be at least 1".into()));
        }
        if self.x0.len() != problem.n_states() {
            return Err(SimError::Config(format!(
                "x0 has {} entries, the system has {} states",
                self.x0.len(),
                problem.n_states()
            )));
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(SimError::Config("x0 must be finite".into()));
        }
        match (self.variant, &self.delta) {
            (Variant::Approximate, None) => {
                return Err(SimError::Config("the approximate variant needs an input-increment set".into()))
            }
            (Variant::Approximate, Some(d)) => {
                let stored = offline.forward_delta.as_ref().map(|f| &f.delta);
                if stored != Some(d) {
                    return Err(SimError::Config(
                        "the offline artifact was not built for this input-increment set".into(),
                    ));
                }
            }
            (_, Some(_)) => {
                return Err(SimError::Config("an input-increment set is only used by the approximate variant".into()))
            }
            _ => {}
        }
        Ok(())
    }
}

/// One closed-loop step.
#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub status: &'static str,
    pub iterations: usize,
    /// Index-set construction plus QP assembly and solve.
    pub solve_time_us: u64,
    pub sets_time_us: u64,
    pub qp_time_us: u64,
    pub retained: usize,
    /// Indexed forward, backward, optimality.
    pub removed: [usize; 3],
    pub total_constraints: usize,
    pub retained_percent: f64,
    pub cost: f64,
    /// Largest row violation of the predicted trajectory of this step.
    pub plan_violation: f64,
    /// Largest violation of `x_k` against the step-1 state set; `None` at
    /// `k = 0`, which is not constrained.
    pub state_violation: Option<f64>,
    #[serde(skip)]
    pub audit: Option<StepAudit>,
}

/// Where and why a run stopped early.
#[derive(Debug, Clone, Serialize)]
pub struct Halt {
    pub k: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ClosedLoopTrace {
    pub variant: Variant,
    pub records: Vec<StepRecord>,
    /// State after the last applied input.
    pub final_state: DVector<f64>,
    pub halted: Option<Halt>,
}

fn micros(d: Duration) -> u64 {
    d.as_micros() as u64
}

/// Receding-horizon closed loop; the plant is the prediction model.
pub fn simulate(problem: &MpcProblem, offline: &OfflineSets, config: &RunConfig) -> Result<ClosedLoopTrace> {
    config.validate(problem, offline)?;
    let options = OnlineOptions {
        rule: config.rule,
        verify: config.verify,
        ..Default::default()
    };
    let ctx = OnlineContext::new(problem, offline, options)?;
    let mut ctrl = Controller::new(ctx, config.variant)?;
    let sys = problem.system();
    let first_set = problem.state_set(1);
    let mut x = config.x0.clone();
    let mut records = Vec::with_capacity(config.steps);
    let mut halted = None;
    for k in 0..config.steps {
        let out = match ctrl.step(&x) {
            Ok(o) => o,
            Err(CampcError::InfeasibleState) if k == 0 => return Err(SimError::InfeasibleInitialState),
            Err(e) => {
                halted = Some(Halt {
                    k,
                    reason: e.to_string(),
                });
                break;
            }
        };
        let audit = match (&out.audit, config.verify) {
            (Some(a), _) => Some(a.clone()),
            (None, true) => Some(vacuous_audit(problem, &x, &out.solution.u)),
            (None, false) => None,
        };
        let r = &out.report;
        records.push(StepRecord {
            k,
            x: x.iter().copied().collect(),
            u: out.u_apply.iter().copied().collect(),
            status: if out.fallback { "fallback" } else { "optimal" },
            iterations: out.solution.iterations,
            solve_time_us: micros(out.sets_time + out.qp_time),
            sets_time_us: micros(out.sets_time),
            qp_time_us: micros(out.qp_time),
            retained: r.retained(),
            removed: Source::ALL.map(|s| r.removed(s)),
            total_constraints: r.total(),
            retained_percent: r.retained_percent(),
            cost: out.solution.cost,
            plan_violation: problem.max_violation(&x, &out.solution.u),
            state_violation: (k > 0).then(|| first_set.max_violation(&x)),
            audit,
        });
        x = sys.step(&x, &out.u_apply);
    }
    Ok(ClosedLoopTrace {
        variant: config.variant,
        records,
        final_state: x,
        halted,
    })
}

/// Audit failures per condition over a trace.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AuditTally {
    pub audited: usize,
    pub c1_failures: usize,
    pub c2_failures: usize,
    pub c3_failures: usize,
}

impl AuditTally {
    pub fn clean(&self) -> bool {
        self.c1_failures + self.c2_failures + self.c3_failures == 0
    }
}

/// Aggregates of one trace, serialized into the run summary.
#[derive(Debug, Clone, Serialize)]
pub struct TraceSummary {
    pub variant: &'static str,
    pub steps: usize,
    pub halted: Option<Halt>,
    pub final_state: Vec<f64>,
    /// Worst violation over visited states `x_1, x_2, …` and the final state.
    pub max_state_violation: f64,
    /// Worst violation over every predicted trajectory.
    pub max_plan_violation: f64,
    pub max_input_violation: f64,
    pub fallbacks: usize,
    pub audits: AuditTally,
    pub retained_percent: Vec<f64>,
    pub mean_retained_percent: f64,
    /// Per-step time with the first (warm-up) step excluded.
    pub max_step_time_us: u64,
    pub median_step_time_us: u64,
    pub max_sets_time_us: u64,
    pub max_qp_time_us: u64,
}

impl ClosedLoopTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn states(&self) -> Vec<DVector<f64>> {
        self.records.iter().map(|r| DVector::from_column_slice(&r.x)).collect()
    }

    pub fn inputs(&self) -> Vec<DVector<f64>> {
        self.records.iter().map(|r| DVector::from_column_slice(&r.u)).collect()
    }

    pub fn retained_percent_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.retained_percent).collect()
    }

    pub fn audit_tally(&self) -> AuditTally {
        let mut t = AuditTally::default();
        for a in self.records.iter().filter_map(|r| r.audit.as_ref()) {
            t.audited += 1;
            t.c1_failures += usize::from(!a.c1);
            t.c2_failures += usize::from(!a.c2);
            t.c3_failures += usize::from(!a.c3);
        }
        t
    }

    /// Worst violation over the visited states after `x_0`, including the
    /// state reached by the last input.
    pub fn max_state_violation(&self, problem: &MpcProblem) -> f64 {
        let last = problem.state_set(1).max_violation(&self.final_state);
        self.records
            .iter()
            .filter_map(|r| r.state_violation)
            .fold(if self.is_empty() { f64::NEG_INFINITY } else { last }, f64::max)
    }

    pub fn summary(&self, problem: &MpcProblem) -> TraceSummary {
        let series = self.retained_percent_series();
        let mean = if series.is_empty() {
            0.0
        } else {
            series.iter().sum::<f64>() / series.len() as f64
        };
        let timed: Vec<&StepRecord> = self.records.iter().skip(1).collect();
        let mut times: Vec<u64> = timed.iter().map(|r| r.solve_time_us).collect();
        times.sort_unstable();
        let input = problem.input_set();
        TraceSummary {
            variant: variant_name(self.variant),
            steps: self.len(),
            halted: self.halted.clone(),
            final_state: self.final_state.iter().copied().collect(),
            max_state_violation: self.max_state_violation(problem),
            max_plan_violation: self.records.iter().map(|r| r.plan_violation).fold(f64::NEG_INFINITY, f64::max),
            max_input_violation: self
                .records
                .iter()
                .map(|r| input.max_violation(&DVector::from_column_slice(&r.u)))
                .fold(f64::NEG_INFINITY, f64::max),
            fallbacks: self.records.iter().filter(|r| r.status == "fallback").count(),
            audits: self.audit_tally(),
            retained_percent: series,
            mean_retained_percent: mean,
            max_step_time_us: times.last().copied().unwrap_or(0),
            median_step_time_us: times.get(times.len() / 2).copied().unwrap_or(0),
            max_sets_time_us: timed.iter().map(|r| r.sets_time_us).max().unwrap_or(0),
            max_qp_time_us: timed.iter().map(|r| r.qp_time_us).max().unwrap_or(0),
        }
    }

    /// CSV trace: `k,x0..,u0..,status,iters,solve_time_us,retained,
    /// removed_fwd,removed_bwd,removed_opt,total_constraints`. `preamble`
    /// lines are written first as `#` comments.
    pub fn write_csv<W: Write>(&self, out: W, preamble: &[String]) -> Result<()> {
        let mut out = out;
        for line in preamble {
            writeln!(out, "# {line}")?;
        }
        let n = self.final_state.len();
        let m = self.records.first().map_or(0, |r| r.u.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["k".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.extend((0..m).map(|i| format!("u{i}")));
        header.extend(
            [
                "status",
                "iters",
                "solve_time_us",
                "retained",
                "removed_fwd",
                "removed_bwd",
                "removed_opt",
                "total_constraints",
            ]
            .map(String::from),
        );
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.k.to_string()];
            row.extend(r.x.iter().map(|v| v.to_string()));
            row.extend(r.u.iter().map(|v| v.to_string()));
            row.push(r.status.to_string());
            row.push(r.iterations.to_string());
            row.push(r.solve_time_us.to_string());
            row.push(r.retained.to_string());
            row.extend(r.removed.iter().map(|v| v.to_string()));
            row.push(r.total_constraints.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
