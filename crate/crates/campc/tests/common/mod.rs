#![allow(dead_code)]

use campc_geometry::HPolytope;
use campc_model::{CostWeights, LtiSystem, MpcProblem};
use campc_qp::{assemble_full_qp, solve_qp, QpSpec, QpStatus};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

/// Box rows plus random unit-normal rows around the origin.
pub fn random_set(rng: &mut ChaCha8Rng, n: usize, rows: usize, reach: (f64, f64)) -> HPolytope {
    let half = rng.gen_range(reach.0..reach.1);
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
    HPolytope::from_rows(n, &c, &b).unwrap()
}

/// Small random problem: `n ∈ {2, 3}`, one input, horizon ≤ 5, at most 40
/// rows per state set, no terminal law.
pub fn random_problem(rng: &mut ChaCha8Rng) -> MpcProblem {
    let n = rng.gen_range(2..=3);
    let horizon = rng.gen_range(2..=5);
    let a = DMatrix::identity(n, n) + DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.3..0.3));
    let b = DMatrix::from_fn(n, 1, |_, _| rng.gen_range(-1.0..1.0));
    let sys = LtiSystem::new(a, b).unwrap();
    let mut sets = Vec::with_capacity(horizon);
    for _ in 1..horizon {
        let rows = rng.gen_range(2 * n..=40);
        sets.push(random_set(rng, n, rows, (2.0, 5.0)));
    }
    let rows = rng.gen_range(2 * n..=12);
    sets.push(random_set(rng, n, rows, (0.3, 1.5)));
    let input = HPolytope::symmetric_box(1, rng.gen_range(0.5..2.0)).unwrap();
    let weights = CostWeights::new(
        DMatrix::identity(n, n),
        DMatrix::identity(n, n) * rng.gen_range(1.0..5.0),
        DMatrix::identity(1, 1) * rng.gen_range(0.1..2.0),
    )
    .unwrap();
    MpcProblem::new(sys, horizon, sets, input, weights, None).unwrap()
}

pub fn random_state(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-radius..radius))
}

/// A feasible sequence for `x`: the projection of a random target onto the
/// feasible set of `spec`.
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
    .unwrap();
    let sol = solve_qp(&proj, None).unwrap();
    (sol.status == QpStatus::Optimal).then_some(sol.u)
}

pub fn full_feasible(problem: &MpcProblem, x: &DVector<f64>) -> bool {
    let spec = assemble_full_qp(problem, x, None).unwrap();
    solve_qp(&spec, None).unwrap().status == QpStatus::Optimal
}
