use campc_geometry::HPolytope;
use campc_model::benchmark::{
    double_integrator_law, double_integrator_state_set, double_integrator_system, ellipse_polygon,
    ellipse_shapes, tangency_points,
};
use campc_model::{
    build_double_integrator, build_terminal_set, is_invariant, CostWeights, LtiSystem, MpcProblem,
    ProblemDocument, TerminalLaw,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

fn random_problem(rng: &mut ChaCha8Rng, n: usize, m: usize, horizon: usize) -> MpcProblem {
    let sys = LtiSystem::new(random_matrix(rng, n, n), random_matrix(rng, n, m)).unwrap();
    let qh = random_matrix(rng, n, n);
    let rh = random_matrix(rng, m, m);
    let weights = CostWeights::new(
        &qh * qh.transpose(),
        DMatrix::identity(n, n) * 2.0,
        &rh * rh.transpose() + DMatrix::identity(m, m),
    )
    .unwrap();
    let sets = vec![HPolytope::symmetric_box(n, 10.0).unwrap(); horizon];
    let input = HPolytope::symmetric_box(m, 1.0).unwrap();
    MpcProblem::new(sys, horizon, sets, input, weights, None).unwrap()
}

/// Summed stage cost `Σ x_iᵀQx_i + u_iᵀRu_i` with `P` on the last state,
/// omitting the `x_0` term.
fn stage_cost(p: &MpcProblem, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
    let mut state = x.clone();
    let mut total = 0.0;
    for t in 0..p.horizon() {
        let ut = p.input_at(u, t);
        total += (ut.transpose() * p.weights().r() * &ut)[(0, 0)];
        state = p.system().step(&state, &ut);
        let w = if t + 1 == p.horizon() { p.weights().p() } else { p.weights().q() };
        total += (state.transpose() * w * &state)[(0, 0)];
    }
    total
}

#[test]
fn prediction_matches_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let (n, m) = (rng.gen_range(1..5), rng.gen_range(1..3));
        let p = random_problem(&mut rng, n, m, 5);
        let x = random_vector(&mut rng, n);
        let u = random_vector(&mut rng, 5 * m);
        let pred = p.predict(&x, &u);
        let mut state = x.clone();
        for t in 0..5 {
            state = p.system().step(&state, &p.input_at(&u, t));
            let block = pred.rows(t * n, n);
            let scale = 1.0 + state.amax();
            assert!((block - &state).amax() <= 1e-12 * scale);
        }
    }
}

#[test]
fn condensed_cost_matches_stage_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let (n, m, h) = (rng.gen_range(1..4), rng.gen_range(1..3), rng.gen_range(1..6));
        let p = random_problem(&mut rng, n, m, h);
        let x = random_vector(&mut rng, n);
        let u1 = random_vector(&mut rng, h * m);
        let u2 = random_vector(&mut rng, h * m);
        let lhs = p.condensed_cost(&x, &u1) - p.condensed_cost(&x, &u2);
        let rhs = stage_cost(&p, &x, &u1) - stage_cost(&p, &x, &u2);
        assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }
}

#[test]
fn hessian_factor_and_stationarity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let (n, m, h) = (rng.gen_range(1..4), rng.gen_range(1..3), rng.gen_range(1..6));
        let p = random_problem(&mut rng, n, m, h);
        let g = p.g();
        for i in 0..g.nrows() {
            for j in 0..i {
                assert_eq!(g[(i, j)], 0.0);
            }
        }
        // Rebuild ΓᵀQ̄Γ + R̄ independently.
        let mut hess = DMatrix::zeros(h * m, h * m);
        for t in 0..h {
            hess.view_mut((t * m, t * m), (m, m)).copy_from(p.weights().r());
        }
        for i in 1..=h {
            let w = if i == h { p.weights().p() } else { p.weights().q() };
            let gb = p.gamma_block(i);
            hess += gb.transpose() * w * &gb;
        }
        assert!((g.transpose() * g - &hess).amax() <= 1e-10 * (1.0 + hess.amax()));
        // Gradient of the stage-sum cost vanishes at Kq·x (central differences are
        // exact for quadratics up to rounding).
        let x = random_vector(&mut rng, n);
        let q = p.unconstrained_minimizer(&x);
        for k in 0..h * m {
            let mut e = DVector::zeros(h * m);
            e[k] = 1e-3;
            let grad = (stage_cost(&p, &x, &(&q + &e)) - stage_cost(&p, &x, &(&q - &e))) / 2e-3;
            assert!(grad.abs() <= 1e-8, "component {k}: {grad}");
        }
    }
}

#[test]
fn expansion_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let p = random_problem(&mut rng, 3, 2, 4);
        let x = random_vector(&mut rng, 3);
        let d = random_vector(&mut rng, 8);
        let q = p.unconstrained_minimizer(&x);
        let lhs = p.condensed_cost(&x, &(&q + &d)) - p.condensed_cost(&x, &q);
        let rhs = (p.g() * &d).norm_squared();
        assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs));
    }
}

fn boxed(lo: &[f64], hi: &[f64]) -> campc_geometry::Result<HPolytope> {
    HPolytope::from_box(&DVector::from_column_slice(lo), &DVector::from_column_slice(hi))
}

fn scalar_sys(a: f64, b: f64) -> LtiSystem {
    LtiSystem::new(DMatrix::from_element(1, 1, a), DMatrix::from_element(1, 1, b)).unwrap()
}

#[test]
fn deadbeat_law_keeps_start_set() {
    let sys = LtiSystem::new(
        DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
        DMatrix::identity(2, 2),
    )
    .unwrap();
    let law = TerminalLaw::new(-sys.a().clone(), &sys).unwrap();
    let x1 = boxed(&[-1.0, -2.0], &[3.0, 1.0]).unwrap();
    let out = build_terminal_set(&sys, &law, &x1, 1).unwrap();
    assert_eq!(out.as_box(), x1.as_box());
    assert!(is_invariant(&sys, &law, &out).unwrap());
}

#[test]
fn identity_closed_loop_keeps_start_set() {
    let sys = scalar_sys(0.5, 1.0);
    let law = TerminalLaw::new(DMatrix::from_element(1, 1, 0.5), &sys).unwrap();
    let x1 = boxed(&[-1.0], &[2.0]).unwrap();
    let out = build_terminal_set(&sys, &law, &x1, 5).unwrap();
    assert_eq!(out.as_box(), x1.as_box());
}

#[test]
fn expanding_loop_shrinks_to_invariant_core() {
    // x⁺ = 2x on [−1, 3] has maximal invariant set {0}·… the iteration
    // halves the upper bound each step and never converges to a full-dimensional set.
    let sys = scalar_sys(2.0, 1.0);
    let law = TerminalLaw::new(DMatrix::zeros(1, 1), &sys).unwrap();
    let x1 = boxed(&[-1.0], &[3.0]).unwrap();
    assert!(build_terminal_set(&sys, &law, &x1, 5).is_err());
    // x⁺ = −0.5x on [−1, 3]: one step clips the upper bound to 2.
    let sys = scalar_sys(-0.5, 1.0);
    let out = build_terminal_set(&sys, &law, &x1, 10).unwrap();
    let (lo, hi) = out.as_box().unwrap();
    assert!((lo[0] + 1.0).abs() < 1e-12 && (hi[0] - 2.0).abs() < 1e-12);
    assert!(is_invariant(&sys, &law, &out).unwrap());
}

#[test]
fn tangent_rows_are_tight() {
    for shape in ellipse_shapes() {
        let poly = ellipse_polygon(&shape, 37).unwrap();
        for (j, v) in tangency_points(&shape, 37).iter().enumerate() {
            let lhs = poly.row(j).dot(v);
            assert!((lhs - poly.offset(j)).abs() <= 1e-12 * poly.offset(j).abs().max(1.0));
            let d = v - DVector::from_vec(vec![2.15, 0.0]);
            assert!(((d.transpose() * &shape * &d)[(0, 0)] - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn each_ellipse_polygon_is_irredundant() {
    for shape in ellipse_shapes() {
        let poly = ellipse_polygon(&shape, 330).unwrap();
        // Dropping row j must enlarge the set: the LP over the others exceeds b_j.
        let pruned = poly.prune();
        assert_eq!(pruned.kept.len(), 330);
        for j in (0..330).step_by(11) {
            let others: Vec<usize> = (0..330).filter(|&k| k != j).collect();
            let rest = poly.select_rows(&others);
            let r = campc_geometry::lp_solve(&poly.row(j), &rest).unwrap();
            assert!(r.value > poly.offset(j) + 1e-9);
        }
    }
}

#[test]
fn intersection_redundancy_is_partial() {
    let x1 = double_integrator_state_set(330).unwrap();
    assert_eq!(x1.n_rows(), 660);
    let kept = x1.prune().kept.len();
    assert!(kept < 660 && kept > 0);
}

#[test]
fn benchmark_counts_and_terminal_certificate() {
    let p = build_double_integrator(330, 12).unwrap();
    for i in 1..12 {
        assert_eq!(p.state_set(i).n_rows(), 660);
    }
    let non_terminal: usize = (1..12).map(|i| p.state_set(i).n_rows()).sum();
    assert_eq!(non_terminal, 7260);
    assert_eq!(p.total_state_constraints(), 7260 + p.terminal_set().n_rows());

    let sys = double_integrator_system();
    let law = double_integrator_law();
    let terminal = p.terminal_set();
    assert!(is_invariant(&sys, &law, terminal).unwrap());
    // X_N ⊆ X_1 and the law is admissible on X_N.
    let inside = terminal.implied_rows(p.state_set(1)).unwrap();
    assert!(inside.iter().all(|&b| b));
    let law_rows = campc_model::law_admissible_region(&law, p.input_set()).unwrap();
    assert!(terminal.implied_rows(&law_rows).unwrap().iter().all(|&b| b));
    assert!(terminal.contains(&DVector::zeros(2), 0.0));
}

#[test]
fn document_round_trip_preserves_checksum() {
    let p = build_double_integrator(20, 4).unwrap();
    let json = serde_json::to_string(&p.to_document()).unwrap();
    let doc: ProblemDocument = serde_json::from_str(&json).unwrap();
    let q = MpcProblem::from_document(&doc).unwrap();
    assert_eq!(p.checksum(), q.checksum());
    assert_eq!(p.checksum().len(), 64);
    assert_eq!(p.g(), q.g());

    let mut value: serde_json::Value = serde_json::from_str(&json).unwrap();
    value["extra"] = serde_json::json!(1);
    assert!(serde_json::from_value::<ProblemDocument>(value).is_err());

    let other = build_double_integrator(21, 4).unwrap();
    assert_ne!(p.checksum(), other.checksum());
}

#[test]
fn too_few_tangency_points_rejected() {
    assert!(build_double_integrator(2, 5).is_err());
    assert!(build_double_integrator(10, 0).is_err());
}
