//! Seeded randomized suites: reduced-vs-full exactness, monotone
//! relaxation, augmented exactness, optimality-ball containment, the
//! covering test against the support function, and reach-set certificates.

use campc::{optimality_ellipsoid, CampcError, OnlineContext, OnlineOptions, RemovalRule};
use campc_geometry::{halfspace_covers_ellipsoid, Ellipsoid, HPolytope, Zonotope};
use campc_model::{CostWeights, LtiSystem, MpcProblem};
use campc_qp::{assemble_full_qp, solve_qp, InputBand, QpSpec, QpStatus};
use campc_reach::{
    build_offline_with_geometry, forward_certificate, inner_certificate, outer_certificate, OfflineSets,
    ReachGeometry,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Minimizer agreement between reduced and full problems.
pub const MINIMIZER_TOL: f64 = 1e-7;
/// Gauge excess allowed for the optimality ball and for fit containment.
pub const CONTAINMENT_TOL: f64 = 1e-7;
const MAX_FAILURE_NOTES: usize = 10;

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Random instances for the removal and geometry suites.
    pub cases: usize,
    /// Random QPs for the optimality-ball suite.
    pub qp_cases: usize,
    /// Random `(c, b, E)` triples for the covering suite.
    pub covering_cases: usize,
    /// Sample points per set in the geometry suite.
    pub samples: usize,
    pub rule: RemovalRule,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: 0,
            cases: 100,
            qp_cases: 500,
            covering_cases: 1000,
            samples: 10_000,
            rule: RemovalRule::Signed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub passed: usize,
    /// Instances regenerated because offline precomputation failed.
    pub regenerated: usize,
    /// The first few failures, for the log.
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        SuiteReport {
            name,
            cases: 0,
            passed: 0,
            regenerated: 0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, outcome: std::result::Result<(), String>) {
        self.cases += 1;
        match outcome {
            Ok(()) => self.passed += 1,
            Err(note) => {
                if self.failures.len() < MAX_FAILURE_NOTES {
                    self.failures.push(format!("case {}: {note}", self.cases - 1));
                }
            }
        }
    }

    pub fn ok(&self) -> bool {
        self.cases > 0 && self.passed == self.cases
    }
}

/// A random problem with its input-increment set.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub problem: MpcProblem,
    pub delta: HPolytope,
}

fn random_set(rng: &mut ChaCha8Rng, n: usize, rows: usize, half: f64) -> HPolytope {
    let mut c = Vec::with_capacity(rows);
    let mut b = Vec::with_capacity(rows);
    for k in 0..n {
        for s in [1.0, -1.0] {
            let mut r = vec![0.0; n];
            r[k] = s;
            c.push(r);
            b.push(half);
        }
    }
    while c.len() < rows {
        let r: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 0.2 {
            continue;
        }
        c.push(r.iter().map(|v| v / norm).collect());
        b.push(rng.gen_range(0.3 * half..half));
    }
    HPolytope::from_rows(n, &c, &b).expect("rows are finite and consistent")
}

/// `n ∈ {2, 3}`, one input, horizon 2..=5, up to 40 rows per state set,
/// `R ≻ 0`, a box input set and a symmetric increment set inside it.
pub fn random_instance(rng: &mut ChaCha8Rng) -> RandomInstance {
    let n = rng.gen_range(2..=3);
    let horizon = rng.gen_range(2..=5);
    let a = DMatrix::identity(n, n) + DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.3..0.3));
    let b = DMatrix::from_fn(n, 1, |_, _| rng.gen_range(-1.0..1.0));
    let sys = LtiSystem::new(a, b).expect("finite matrices");
    let mut sets = Vec::with_capacity(horizon);
    for _ in 1..horizon {
        let rows = rng.gen_range(2 * n..=40);
        let half = rng.gen_range(2.0..5.0);
        sets.push(random_set(rng, n, rows, half));
    }
    let rows = rng.gen_range(2 * n..=12);
    let half = rng.gen_range(0.3..1.5);
    sets.push(random_set(rng, n, rows, half));
    let bound = rng.gen_range(0.5..2.0);
    let input = HPolytope::symmetric_box(1, bound).expect("positive bound");
    let delta = HPolytope::symmetric_box(1, rng.gen_range(0.1..1.0) * bound).expect("positive bound");
    let weights = CostWeights::new(
        DMatrix::identity(n, n),
        DMatrix::identity(n, n) * rng.gen_range(1.0..5.0),
        DMatrix::identity(1, 1) * rng.gen_range(0.1..2.0),
    )
    .expect("positive weights");
    let problem = MpcProblem::new(sys, horizon, sets, input, weights, None).expect("consistent data");
    RandomInstance { problem, delta }
}

/// Next instance whose offline precomputation succeeds.
fn offline_instance(rng: &mut ChaCha8Rng, report: &mut SuiteReport) -> (RandomInstance, OfflineSets, ReachGeometry) {
    loop {
        let inst = random_instance(rng);
        match build_offline_with_geometry(&inst.problem, Some(&inst.delta)) {
            Ok((sets, geo)) => return (inst, sets, geo),
            Err(_) => report.regenerated += 1,
        }
    }
}

fn random_state(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-radius..radius))
}

/// Projection of a random target onto the feasible set of `spec`.
pub fn feasible_sequence(rng: &mut ChaCha8Rng, spec: &QpSpec) -> Option<DVector<f64>> {
    let nu = spec.n_vars();
    let target = DVector::from_fn(nu, |_, _| rng.gen_range(-2.0..2.0));
    let proj = QpSpec::new(
        DMatrix::identity(nu, nu),
        target,
        spec.m().clone(),
        spec.d().clone(),
        spec.tags().to_vec(),
    )
    .ok()?;
    let sol = solve_qp(&proj, None).ok()?;
    (sol.status == QpStatus::Optimal).then_some(sol.u)
}

fn close(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    (a - b).amax() <= MINIMIZER_TOL
}

/// Exactness, monotone relaxation and augmented exactness over the same
/// random instances. Each instance is probed at several states, feasible
/// and infeasible.
pub fn removal_suites(opts: &SuiteOptions) -> [SuiteReport; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut exact = SuiteReport::new("exactness");
    let mut relax = SuiteReport::new("relaxation");
    let mut aug = SuiteReport::new("augmented");
    for _ in 0..opts.cases {
        let (inst, sets, _) = offline_instance(&mut rng, &mut exact);
        let p = &inst.problem;
        let options = OnlineOptions {
            rule: opts.rule,
            verify: true,
            ..Default::default()
        };
        let ctx = match OnlineContext::new(p, &sets, options) {
            Ok(c) => c,
            Err(e) => {
                let note = Err(e.to_string());
                exact.record(note.clone());
                relax.record(note.clone());
                aug.record(note);
                continue;
            }
        };
        let (mut e_out, mut r_out, mut a_out) = (Ok(()), Ok(()), Ok(()));
        for probe in 0..4 {
            let x = random_state(&mut rng, p.n_states(), 2.5);
            let full = ctx.full_step(&x, None, None);
            let cold = ctx.exact_step(&x, None);
            let (full, cold) = match (full, cold) {
                (Err(CampcError::InfeasibleState), Err(CampcError::InfeasibleState)) => continue,
                (Ok(f), Ok(c)) => (f, c),
                (f, c) => {
                    e_out = e_out.and(Err(format!(
                        "probe {probe}: full {} / reduced {}",
                        f.err().map_or("feasible".into(), |e| e.to_string()),
                        c.err().map_or("feasible".into(), |e| e.to_string())
                    )));
                    continue;
                }
            };
            if !close(&cold.solution.u, &full.solution.u) {
                e_out = e_out.and(Err(format!("probe {probe}: cold minimizers differ")));
            }
            if !cold.audit.as_ref().is_some_and(|a| a.passed()) {
                e_out = e_out.and(Err(format!("probe {probe}: audit failed on the cold step")));
            }
            let scale = 1.0 + full.solution.cost.abs();
            if cold.solution.cost > full.solution.cost + 1e-9 * scale {
                r_out = r_out.and(Err(format!("probe {probe}: reduced value above full value")));
            }
            if (cold.solution.cost - full.solution.cost).abs() > MINIMIZER_TOL * scale {
                r_out = r_out.and(Err(format!("probe {probe}: values differ")));
            }

            let Some(u_tilde) = assemble_full_qp(p, &x, None).ok().and_then(|s| feasible_sequence(&mut rng, &s))
            else {
                e_out = e_out.and(Err(format!("probe {probe}: no feasible warm start")));
                continue;
            };
            match ctx.exact_step(&x, Some(&u_tilde)) {
                Ok(w) => {
                    if !close(&w.solution.u, &full.solution.u) {
                        e_out = e_out.and(Err(format!("probe {probe}: warm minimizers differ")));
                    }
                    if !w.audit.as_ref().is_some_and(|a| a.passed()) {
                        e_out = e_out.and(Err(format!("probe {probe}: audit failed on the warm step")));
                    }
                    if w.solution.cost > full.solution.cost + 1e-9 * scale {
                        r_out = r_out.and(Err(format!("probe {probe}: warm reduced value above full value")));
                    }
                }
                Err(e) => e_out = e_out.and(Err(format!("probe {probe}: warm step: {e}"))),
            }

            let band = InputBand {
                nominal: u_tilde.clone(),
                delta: inst.delta.clone(),
            };
            match (ctx.full_step(&x, Some(&u_tilde), Some(&band)), ctx.approx_step(&x, &u_tilde)) {
                (Ok(f), Ok(r)) => {
                    if !close(&f.solution.u, &r.solution.u) {
                        a_out = a_out.and(Err(format!("probe {probe}: augmented minimizers differ")));
                    }
                    if p.max_violation(&x, &r.solution.u) > 1e-9 {
                        a_out = a_out.and(Err(format!("probe {probe}: augmented minimizer violates a row")));
                    }
                    if !r.audit.as_ref().is_some_and(|a| a.passed()) {
                        a_out = a_out.and(Err(format!("probe {probe}: audit failed on the augmented step")));
                    }
                }
                (f, r) => {
                    a_out = a_out.and(Err(format!(
                        "probe {probe}: augmented full {:?} / reduced {:?}",
                        f.err(),
                        r.err()
                    )))
                }
            }
        }
        exact.record(e_out);
        relax.record(r_out);
        aug.record(a_out);
    }
    [exact, relax, aug]
}

/// The constrained minimizer (and that of a banded subproblem) lies in the
/// optimality ball built from a feasible sequence.
pub fn optimality_suite(opts: &SuiteOptions) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut report = SuiteReport::new("optimality-ball");
    while report.cases < opts.qp_cases {
        let inst = random_instance(&mut rng);
        let p = &inst.problem;
        let x = random_state(&mut rng, p.n_states(), 1.5);
        let Ok(full) = assemble_full_qp(p, &x, None) else { continue };
        let Some(u_tilde) = feasible_sequence(&mut rng, &full) else { continue };
        let outcome = (|| {
            let ball = optimality_ellipsoid(p, &x, &u_tilde).map_err(|e| e.to_string())?;
            let sol = solve_qp(&full, None).map_err(|e| e.to_string())?;
            if sol.status != QpStatus::Optimal {
                return Err(format!("solver status {:?}", sol.status));
            }
            let g = ball.ellipsoid.gauge(&sol.u);
            if g > 1.0 + CONTAINMENT_TOL {
                return Err(format!("minimizer gauge {g}"));
            }
            let band = InputBand {
                nominal: u_tilde.clone(),
                delta: inst.delta.clone(),
            };
            let sub = assemble_full_qp(p, &x, Some(&band)).map_err(|e| e.to_string())?;
            let sol = solve_qp(&sub, None).map_err(|e| e.to_string())?;
            let g = ball.ellipsoid.gauge(&sol.u);
            if sol.status != QpStatus::Optimal || g > 1.0 + CONTAINMENT_TOL {
                return Err(format!("banded minimizer gauge {g}"));
            }
            Ok(())
        })();
        report.record(outcome);
    }
    report
}

/// The covering test against `max_{x∈E} c·x ≤ b`, with the support computed
/// independently as `c·q + sqrt(cᵀ(LᵀL)⁻¹c)`.
pub fn covering_suite(opts: &SuiteOptions) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5851_f42d_4c95_7f2d);
    let mut report = SuiteReport::new("covering-test");
    while report.cases < opts.covering_cases {
        let n = rng.gen_range(1..=4);
        let shape = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0));
        let Some(chol) = (shape.transpose() * &shape).cholesky() else { continue };
        if chol.l().diagonal().min() < 1e-3 {
            continue;
        }
        let center = random_state(&mut rng, n, 2.0);
        let Ok(e) = Ellipsoid::new(shape, center.clone()) else { continue };
        let c = random_state(&mut rng, n, 1.0);
        let support = c.dot(&center) + c.dot(&chol.solve(&c)).sqrt();
        let b = support + rng.gen_range(-1.0..1.0);
        let outcome = match halfspace_covers_ellipsoid(&c, b, &e) {
            Ok(covers) if covers == (support <= b) => Ok(()),
            Ok(covers) => Err(format!("test says {covers}, support {support} vs {b}")),
            Err(err) => Err(err.to_string()),
        };
        report.record(outcome);
    }
    report
}

fn zonotope_sample(z: &Zonotope, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let w = DVector::from_fn(z.n_generators(), |_, _| match rng.gen_range(0..4) {
        0 => 1.0,
        1 => -1.0,
        _ => rng.gen_range(-1.0..=1.0),
    });
    z.center() + z.generators() * w
}

/// Point of the ellipsoid, biased toward its boundary.
fn ellipsoid_sample(e: &Ellipsoid, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let n = e.dim();
    let d: DVector<f64> = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let norm = d.norm().max(1e-12);
    e.point(&(d / norm * rng.gen_range(0.9f64..=1.0).sqrt()))
}

/// Forward fits contain every zonotope vertex, backward inner fits lie in
/// their polytopes row by row, backward outer fits contain the polytope
/// vertices; random samples corroborate the first two.
pub fn geometry_suite(opts: &SuiteOptions) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x2545_f491_4f6c_dd1d);
    let mut report = SuiteReport::new("reach-certificates");
    for _ in 0..opts.cases {
        let (inst, sets, geo) = offline_instance(&mut rng, &mut report);
        let outcome = check_reach(&inst.problem, &sets, &geo, opts.samples, &mut rng);
        report.record(outcome);
    }
    report
}

/// Certificates and sampling for one set of offline fits.
pub fn check_reach(
    problem: &MpcProblem,
    sets: &OfflineSets,
    geo: &ReachGeometry,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> std::result::Result<(), String> {
    let steps = problem.horizon();
    let per_set = samples / steps.max(1) + 1;
    for (k, (z, e)) in geo.zonotopes.iter().zip(&sets.forward).enumerate() {
        let cert = forward_certificate(z, e).map_err(|e| e.to_string())?;
        if cert > CONTAINMENT_TOL {
            return Err(format!("forward fit {} misses a vertex by {cert}", k + 1));
        }
        for _ in 0..per_set {
            if e.gauge(&zonotope_sample(z, rng)) > 1.0 + CONTAINMENT_TOL {
                return Err(format!("forward fit {} misses a sample", k + 1));
            }
        }
    }
    for (k, (inner, outer)) in sets.backward_inner.iter().zip(&sets.backward).enumerate() {
        let poly = &geo.backward[k];
        let cert = inner_certificate(poly, inner);
        if cert > CONTAINMENT_TOL {
            return Err(format!("backward inner fit {} crosses a row by {cert}", k + 1));
        }
        let cert = outer_certificate(poly, outer).map_err(|e| e.to_string())?;
        if cert > CONTAINMENT_TOL {
            return Err(format!("backward outer fit {} misses a vertex by {cert}", k + 1));
        }
        for _ in 0..per_set {
            if poly.max_violation(&ellipsoid_sample(inner, rng)) > CONTAINMENT_TOL {
                return Err(format!("backward inner fit {} has a sample outside", k + 1));
            }
        }
    }
    Ok(())
}

/// Every suite with the given options.
pub fn run_suites(opts: &SuiteOptions) -> Vec<SuiteReport> {
    let [exact, relax, aug] = removal_suites(opts);
    vec![exact, relax, aug, optimality_suite(opts), covering_suite(opts), geometry_suite(opts)]
}

