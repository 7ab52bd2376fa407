use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use campc::{RemovalRule, Variant};
use campc_model::{build_double_integrator, MpcProblem};
use campc_reach::{build_offline, OfflineSets, ReachError};
use campc_sim::{
    compare_traces, run_suites, simulate, variant_name, ClosedLoopTrace, RunConfig, SuiteOptions, SuiteReport,
};
use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::BenchmarkConfig;
use crate::error::{CliError, Result};

/// Exact-vs-full agreement required of a run.
pub const EQUIVALENCE_TOL: f64 = 1e-6;

/// Rows of the assembled full QP: every state row plus every input row.
fn full_qp_rows(p: &MpcProblem) -> usize {
    p.total_state_constraints() + p.horizon() * p.input_set().n_rows()
}

fn preamble(cfg: &BenchmarkConfig, checksum: &str) -> Vec<String> {
    vec![format!("config {}", cfg.to_json()), format!("problem_checksum {checksum}")]
}

pub struct OfflineOutcome {
    pub path: PathBuf,
    pub checksum: String,
    pub forward_fits: usize,
    pub backward_fits: usize,
}

/// Build and save the offline artifact for the configured benchmark.
pub fn cmd_offline(cfg: &BenchmarkConfig) -> Result<OfflineOutcome> {
    cfg.validate()?;
    let problem = build_double_integrator(cfg.n_v, cfg.horizon)?;
    let sets = build_offline(&problem, cfg.delta().as_ref())?;
    std::fs::create_dir_all(&cfg.out)?;
    let path = cfg.offline_path();
    sets.save(&path)?;
    let meta = json!({ "config": cfg, "problem_checksum": sets.problem_checksum });
    std::fs::write(cfg.out.join("offline.meta.json"), serde_json::to_vec_pretty(&meta)?)?;
    log::info!("wrote {}", path.display());
    Ok(OfflineOutcome {
        path,
        checksum: sets.problem_checksum.clone(),
        forward_fits: sets.forward.len(),
        backward_fits: sets.backward.len(),
    })
}

fn load_artifact(cfg: &BenchmarkConfig, problem: &MpcProblem) -> Result<OfflineSets> {
    let path = cfg.offline_path();
    if !path.exists() {
        return Err(CliError::Artifact(format!("no offline artifact at {}", path.display())));
    }
    OfflineSets::load(&path, problem).map_err(|e| match e {
        ReachError::ChecksumMismatch { .. } | ReachError::Version { .. } | ReachError::Malformed(_) | ReachError::Json(_) => {
            CliError::Artifact(format!("{}: {e}", path.display()))
        }
        other => CliError::from(other),
    })
}

pub struct VariantRun {
    pub variant: Variant,
    pub trace: std::result::Result<ClosedLoopTrace, String>,
}

pub struct RunOutcome {
    pub runs: Vec<VariantRun>,
    pub summary: Value,
    pub problem: MpcProblem,
}

impl RunOutcome {
    pub fn trace(&self, v: Variant) -> Option<&ClosedLoopTrace> {
        self.runs.iter().find(|r| r.variant == v).and_then(|r| r.trace.as_ref().ok())
    }

    /// Numerical failure if any variant failed or halted; verification
    /// failure if audits failed or exact and full disagree.
    pub fn check(&self) -> Result<()> {
        for r in &self.runs {
            match &r.trace {
                Err(e) => return Err(CliError::Numerical(format!("{}: {e}", variant_name(r.variant)))),
                Ok(t) => {
                    if let Some(h) = &t.halted {
                        return Err(CliError::Numerical(format!(
                            "{} halted at step {}: {}",
                            variant_name(r.variant),
                            h.k,
                            h.reason
                        )));
                    }
                }
            }
        }
        for r in &self.runs {
            if let Ok(t) = &r.trace {
                if !t.audit_tally().clean() {
                    return Err(CliError::Verification(format!("{} audits failed", variant_name(r.variant))));
                }
            }
        }
        if let (Some(e), Some(f)) = (self.trace(Variant::Exact), self.trace(Variant::Full)) {
            let cmp = compare_traces(e, f, EQUIVALENCE_TOL).map_err(CliError::from)?;
            if !cmp.equal {
                return Err(CliError::Verification(format!(
                    "exact and full differ by {}",
                    cmp.max_state_deviation
                )));
            }
        }
        Ok(())
    }
}

/// Closed-loop runs of every configured variant against the saved artifact.
pub fn cmd_run(cfg: &BenchmarkConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let problem = build_double_integrator(cfg.n_v, cfg.horizon)?;
    let sets = load_artifact(cfg, &problem)?;
    let variants = cfg.parsed_variants()?;
    if variants.contains(&Variant::Approximate) {
        let stored = sets.forward_delta.as_ref().map(|d| &d.delta);
        if stored != cfg.delta().as_ref() {
            return Err(CliError::Artifact("the offline artifact was built for a different delta_bound".into()));
        }
    }
    std::fs::create_dir_all(&cfg.out)?;
    let checksum = sets.problem_checksum.clone();
    let x0 = DVector::from_column_slice(&cfg.x0);
    let mut runs = Vec::new();
    let mut per_variant = serde_json::Map::new();
    for &variant in &variants {
        let mut rc = RunConfig::new(variant, x0.clone(), cfg.steps);
        rc.verify = cfg.verify;
        rc.seed = cfg.seed;
        if variant == Variant::Approximate {
            rc.delta = cfg.delta();
        }
        let name = variant_name(variant);
        let trace = simulate(&problem, &sets, &rc).map_err(|e| e.to_string());
        match &trace {
            Ok(t) => {
                let file = File::create(cfg.out.join(format!("trace_{name}.csv")))?;
                let mut lines = preamble(cfg, &checksum);
                lines.push(format!("variant {name}"));
                t.write_csv(BufWriter::new(file), &lines).map_err(CliError::from)?;
                per_variant.insert(name.into(), serde_json::to_value(t.summary(&problem))?);
            }
            Err(e) => {
                log::error!("{name}: {e}");
                let stale = cfg.out.join(format!("trace_{name}.csv"));
                if stale.exists() {
                    std::fs::remove_file(stale)?;
                }
                per_variant.insert(name.into(), json!({ "error": e }));
            }
        }
        runs.push(VariantRun { variant, trace });
    }

    let mut summary = json!({
        "config": cfg,
        "problem_checksum": checksum,
        "total_state_constraints": problem.total_state_constraints(),
        "variants": per_variant,
    });
    let full = runs.iter().find(|r| r.variant == Variant::Full).and_then(|r| r.trace.as_ref().ok());
    if let Some(full) = full {
        let mut comparisons = serde_json::Map::new();
        for r in &runs {
            let Ok(t) = &r.trace else { continue };
            if r.variant == Variant::Full {
                continue;
            }
            if let Ok(cmp) = compare_traces(t, full, EQUIVALENCE_TOL) {
                comparisons.insert(
                    format!("{}_vs_full", variant_name(r.variant)),
                    json!({
                        "max_state_deviation": cmp.max_state_deviation,
                        "max_input_deviation": cmp.max_input_deviation,
                        "max_cost_deviation": cmp.max_cost_deviation,
                        "tolerance": cmp.tolerance,
                        "equal": cmp.equal,
                    }),
                );
            }
        }
        if !comparisons.is_empty() {
            summary["comparisons"] = Value::Object(comparisons);
        }
    }
    std::fs::write(cfg.out.join("summary.json"), serde_json::to_vec_pretty(&summary)?)?;
    Ok(RunOutcome { runs, summary, problem })
}

/// One sweep point. Times in microseconds, first step excluded.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub n_v: usize,
    pub total_constraints: usize,
    pub qp_rows: usize,
    pub full_max_us: u64,
    pub full_median_us: u64,
    pub exact_max_us: u64,
    pub exact_median_us: u64,
    pub exact_sets_max_us: u64,
    pub exact_qp_max_us: u64,
    pub exact_mean_retained_percent: f64,
    /// Empty on success.
    pub error: String,
}

impl SweepRow {
    fn failed(n_v: usize, error: String) -> Self {
        SweepRow {
            n_v,
            total_constraints: 0,
            qp_rows: 0,
            full_max_us: 0,
            full_median_us: 0,
            exact_max_us: 0,
            exact_median_us: 0,
            exact_sets_max_us: 0,
            exact_qp_max_us: 0,
            exact_mean_retained_percent: 0.0,
            error,
        }
    }
}

/// Offline sets for every sweep point in parallel, then sequential timed
/// closed loops (full and exact) so the timings do not compete for cores.
pub fn cmd_sweep(cfg: &BenchmarkConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if cfg.sweep.is_empty() {
        return Err(CliError::Usage("the sweep list is empty".into()));
    }
    let built: Vec<std::result::Result<(MpcProblem, OfflineSets), String>> = cfg
        .sweep
        .par_iter()
        .map(|&n_v| {
            let p = build_double_integrator(n_v, cfg.horizon).map_err(|e| e.to_string())?;
            let s = build_offline(&p, None).map_err(|e| e.to_string())?;
            Ok((p, s))
        })
        .collect();
    let x0 = DVector::from_column_slice(&cfg.x0);
    let mut rows = Vec::with_capacity(built.len());
    for (&n_v, point) in cfg.sweep.iter().zip(built) {
        let row = point.and_then(|(p, s)| {
            let full = simulate(&p, &s, &RunConfig::new(Variant::Full, x0.clone(), cfg.steps)).map_err(|e| e.to_string())?;
            let exact = simulate(&p, &s, &RunConfig::new(Variant::Exact, x0.clone(), cfg.steps)).map_err(|e| e.to_string())?;
            for t in [&full, &exact] {
                if let Some(h) = &t.halted {
                    return Err(format!("halted at step {}: {}", h.k, h.reason));
                }
            }
            let f = full.summary(&p);
            let e = exact.summary(&p);
            Ok(SweepRow {
                n_v,
                total_constraints: p.total_state_constraints(),
                qp_rows: full_qp_rows(&p),
                full_max_us: f.max_step_time_us,
                full_median_us: f.median_step_time_us,
                exact_max_us: e.max_step_time_us,
                exact_median_us: e.median_step_time_us,
                exact_sets_max_us: e.max_sets_time_us,
                exact_qp_max_us: e.max_qp_time_us,
                exact_mean_retained_percent: e.mean_retained_percent,
                error: String::new(),
            })
        });
        rows.push(row.unwrap_or_else(|e| {
            log::error!("sweep point n_v = {n_v}: {e}");
            SweepRow::failed(n_v, e)
        }));
    }
    std::fs::create_dir_all(&cfg.out)?;
    let mut file = BufWriter::new(File::create(cfg.out.join("sweep.csv"))?);
    {
        use std::io::Write;
        writeln!(file, "# config {}", cfg.to_json())?;
    }
    let mut w = csv::Writer::from_writer(file);
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(rows)
}

/// Faults that `verify` can inject to check that the suites notice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Fault {
    SignFlip,
}

pub fn cmd_verify(cfg: &BenchmarkConfig, fault: Option<Fault>) -> Result<Vec<SuiteReport>> {
    cfg.validate()?;
    let opts = SuiteOptions {
        seed: cfg.seed,
        cases: cfg.cases,
        rule: match fault {
            Some(Fault::SignFlip) => RemovalRule::SignFlipped,
            None => RemovalRule::Signed,
        },
        ..Default::default()
    };
    Ok(run_suites(&opts))
}
