//! Command-line harness: offline precomputation, closed-loop runs,
//! constraint-count sweeps and randomized verification.

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_offline, cmd_run, cmd_sweep, cmd_verify, Fault, RunOutcome, SweepRow};
pub use config::BenchmarkConfig;
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "campc", version, about = "Constraint-adaptive MPC benchmark harness")]
pub struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct ProblemArgs {
    /// Tangent halfplanes per ellipse.
    #[arg(long)]
    pub n_v: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Bound of the input-increment box used by the approximate variant.
    #[arg(long, conflicts_with = "no_delta")]
    pub delta_bound: Option<f64>,
    /// Build without increment fits (disables the approximate variant).
    #[arg(long)]
    pub no_delta: bool,
}

#[derive(Debug, Args, Default)]
pub struct LoopArgs {
    /// Initial state, e.g. `--x0=0.4,0.04`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Precompute reach fits and row norms.
    Offline(ProblemArgs),
    /// Closed-loop runs of the selected variants.
    Run {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        closed_loop: LoopArgs,
        /// Comma-separated subset of full, exact, approx.
        #[arg(long, value_delimiter = ',')]
        variants: Option<Vec<String>>,
        /// Audit every step (C1/C2/C3).
        #[arg(long)]
        verify_invariants: bool,
    },
    /// Per-step timing of full and exact controllers over several n_v.
    Sweep {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        closed_loop: LoopArgs,
        /// Comma-separated n_v values.
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<usize>>,
    },
    /// Randomized exactness, optimality-ball, covering and reach suites.
    Verify {
        #[arg(long)]
        cases: Option<usize>,
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<Fault>,
    },
}

impl ProblemArgs {
    fn apply(&self, cfg: &mut BenchmarkConfig) {
        if let Some(n) = self.n_v {
            cfg.n_v = n;
        }
        if let Some(n) = self.horizon {
            cfg.horizon = n;
        }
        if let Some(d) = self.delta_bound {
            cfg.delta_bound = Some(d);
        }
        if self.no_delta {
            cfg.delta_bound = None;
            cfg.variants.retain(|v| v != "approx" && v != "approximate");
        }
    }
}

impl LoopArgs {
    fn apply(&self, cfg: &mut BenchmarkConfig) {
        if let Some(x) = &self.x0 {
            cfg.x0 = x.clone();
        }
        if let Some(s) = self.steps {
            cfg.steps = s;
        }
    }
}

/// Config file (or defaults) with the command-line overrides applied.
pub fn resolve_config(cli: &Cli) -> Result<BenchmarkConfig> {
    let mut cfg = match &cli.config {
        Some(path) => BenchmarkConfig::load(path)?,
        None => BenchmarkConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match &cli.command {
        Command::Offline(p) => p.apply(&mut cfg),
        Command::Run {
            problem,
            closed_loop,
            variants,
            verify_invariants,
        } => {
            problem.apply(&mut cfg);
            closed_loop.apply(&mut cfg);
            if let Some(v) = variants {
                cfg.variants = v.clone();
            }
            cfg.verify |= *verify_invariants;
        }
        Command::Sweep {
            problem,
            closed_loop,
            sweep,
        } => {
            problem.apply(&mut cfg);
            closed_loop.apply(&mut cfg);
            if let Some(s) = sweep {
                cfg.sweep = s.clone();
            }
        }
        Command::Verify { cases, .. } => {
            if let Some(c) = cases {
                cfg.cases = *c;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Offline(_) => {
            let o = cmd_offline(&cfg)?;
            println!(
                "offline artifact {} ({} forward fits, {} backward fits, problem {})",
                o.path.display(),
                o.forward_fits,
                o.backward_fits,
                o.checksum
            );
        }
        Command::Run { .. } => {
            let outcome = cmd_run(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&outcome.summary["comparisons"])?);
            for r in &outcome.runs {
                match &r.trace {
                    Ok(t) => {
                        let s = t.summary(&outcome.problem);
                        println!(
                            "{:>6}: {} steps, max state violation {:.3e}, mean retained {:.2}%, max step {} us",
                            s.variant, s.steps, s.max_state_violation, s.mean_retained_percent, s.max_step_time_us
                        );
                    }
                    Err(e) => println!("{:>6}: {e}", campc_sim::variant_name(r.variant)),
                }
            }
            outcome.check()?;
        }
        Command::Sweep { .. } => {
            let rows = cmd_sweep(&cfg)?;
            println!("n_v,total_constraints,full_max_us,exact_max_us,exact_sets_max_us,exact_qp_max_us,error");
            for r in &rows {
                println!(
                    "{},{},{},{},{},{},{}",
                    r.n_v, r.total_constraints, r.full_max_us, r.exact_max_us, r.exact_sets_max_us, r.exact_qp_max_us, r.error
                );
            }
        }
        Command::Verify { inject_fault, .. } => {
            let reports = cmd_verify(&cfg, *inject_fault)?;
            let mut failed = Vec::new();
            for r in &reports {
                println!("{:<20} {}/{} passed", r.name, r.passed, r.cases);
                for f in &r.failures {
                    println!("    {f}");
                }
                if !r.ok() {
                    failed.push(r.name);
                }
            }
            if !failed.is_empty() {
                return Err(CliError::Verification(failed.join(", ")));
            }
        }
    }
    Ok(())
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
