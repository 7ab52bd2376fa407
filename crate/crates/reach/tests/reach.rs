use std::sync::OnceLock;

use campc_geometry::{lp_solve, Ellipsoid, HPolytope, LpStatus, Zonotope};
use campc_model::benchmark::{double_integrator_input_set, double_integrator_system};
use campc_model::{build_double_integrator, CostWeights, LtiSystem, MpcProblem};
use campc_reach::{
    backward_reach, build_offline, build_offline_with_geometry, fit_backward, fit_forward,
    forward_certificate, forward_reach, inner_certificate, outer_certificate, outer_input_box,
    OfflineSets, ReachError, ReachGeometry, ARTIFACT_VERSION,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

fn boxed(lo: &[f64], hi: &[f64]) -> HPolytope {
    HPolytope::from_box(&v(lo), &v(hi)).unwrap()
}

fn benchmark() -> &'static (MpcProblem, OfflineSets, ReachGeometry) {
    static CELL: OnceLock<(MpcProblem, OfflineSets, ReachGeometry)> = OnceLock::new();
    CELL.get_or_init(|| {
        let p = build_double_integrator(330, 12).unwrap();
        let (s, g) = build_offline_with_geometry(&p, None).unwrap();
        (p, s, g)
    })
}

/// Uniform-ish point of a zonotope from random generator weights.
fn zonotope_sample(z: &Zonotope, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let w = DVector::from_fn(z.n_generators(), |_, _| {
        if rng.gen_bool(0.5) {
            rng.gen_range(-1.0..=1.0)
        } else if rng.gen_bool(0.5) {
            1.0
        } else {
            -1.0
        }
    });
    z.center() + z.generators() * w
}

fn ellipsoid_sample(e: &Ellipsoid, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let n = e.dim();
    let d = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let r: f64 = rng.gen_range(0.0..=1.0);
    let dir = if d.norm() > 0.0 { d.normalize() } else { DVector::zeros(n) };
    e.point(&(dir * r))
}

// ---- forward ----

#[test]
fn one_step_is_the_input_segment() {
    let z = forward_reach(&double_integrator_system(), &double_integrator_input_set(), 1).unwrap();
    assert_eq!(z.len(), 1);
    assert_eq!(z[0].center(), &v(&[0.0, 0.0]));
    assert_eq!(z[0].n_generators(), 1);
    let g = z[0].generators().column(0).into_owned();
    let g = if g[1] < 0.0 { -g } else { g };
    assert!((g - v(&[0.005, 0.1])).amax() < 1e-15);
}

#[test]
fn zero_input_matrix_gives_points() {
    let sys = LtiSystem::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.3, -0.2, 0.9]), DMatrix::zeros(2, 1)).unwrap();
    let zs = forward_reach(&sys, &double_integrator_input_set(), 5).unwrap();
    for z in &zs {
        assert_eq!(z.center(), &v(&[0.0, 0.0]));
        assert!(z.generators().amax() == 0.0);
        assert_eq!(z.support(&v(&[1.0, 2.0])), 0.0);
    }
}

#[test]
fn sampled_input_sequences_stay_in_shifted_zonotopes() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sys = double_integrator_system();
    let horizon = 8;
    let zs = forward_reach(&sys, &double_integrator_input_set(), horizon).unwrap();
    for _ in 0..1000 {
        let x0 = v(&[rng.gen_range(-5.0..5.0), rng.gen_range(-1.0..1.0)]);
        let mut x = x0.clone();
        let mut a_pow = DMatrix::identity(2, 2);
        for z in &zs {
            let u = v(&[rng.gen_range(-1.0..=1.0)]);
            x = sys.step(&x, &u);
            a_pow = sys.a() * a_pow;
            let rel = &x - &a_pow * &x0;
            assert!(z.contains(&rel, 1e-9).unwrap());
        }
    }
}

#[test]
fn generator_count_grows_by_one_per_step() {
    let (_, _, geo) = benchmark();
    for (i, z) in geo.zonotopes.iter().enumerate() {
        assert_eq!(z.n_generators(), i + 1);
    }
}

#[test]
fn non_box_input_is_rejected_with_a_fallback() {
    let diamond = HPolytope::from_rows(
        2,
        &[vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]],
        &[1.0, 1.0, 1.0, 1.0],
    )
    .unwrap();
    let sys = LtiSystem::new(DMatrix::identity(2, 2), DMatrix::identity(2, 2)).unwrap();
    assert!(matches!(
        forward_reach(&sys, &diamond, 2),
        Err(ReachError::NonZonotopicInput)
    ));
    let outer = outer_input_box(&diamond).unwrap();
    let zs = forward_reach(&sys, &outer, 2).unwrap();
    assert!((zs[1].support(&v(&[1.0, 0.0])) - 2.0).abs() < 1e-9);
}

#[test]
fn segment_fit_is_a_thin_aligned_ellipse() {
    let z = forward_reach(&double_integrator_system(), &double_integrator_input_set(), 1).unwrap();
    let fit = &fit_forward(&z).unwrap()[0];
    let e = &fit.ellipsoid;
    let eig = e.covariance().symmetric_eigen();
    let mut axes: Vec<(f64, DVector<f64>)> = (0..2)
        .map(|k| (eig.eigenvalues[k].max(0.0).sqrt(), eig.eigenvectors.column(k).into_owned()))
        .collect();
    axes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half_length = (0.005f64.powi(2) + 0.1f64.powi(2)).sqrt();
    assert!((axes[1].0 - half_length).abs() < 1e-9);
    assert!(axes[0].0 < 1e-8);
    let dir = v(&[0.005, 0.1]).normalize();
    assert!((axes[1].1.dot(&dir).abs() - 1.0).abs() < 1e-9);
    assert!(forward_certificate(&z[0], e).unwrap() <= 1e-7);
}

#[test]
fn square_fit_has_sqrt_two_semi_axes() {
    let z = Zonotope::from_box(&v(&[-1.0, -1.0]), &v(&[1.0, 1.0])).unwrap();
    let e = &fit_forward(&[z]).unwrap()[0].ellipsoid;
    assert!(e.center().amax() < 1e-9);
    assert!((e.covariance() - DMatrix::identity(2, 2) * 2.0).amax() < 1e-6);
}

#[test]
fn benchmark_forward_fits_contain_vertices_and_samples() {
    let (_, sets, geo) = benchmark();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (z, e) in geo.zonotopes.iter().zip(&sets.forward) {
        assert!(forward_certificate(z, e).unwrap() <= 1e-7);
        for _ in 0..10_000 / geo.zonotopes.len() {
            assert!(e.gauge(&zonotope_sample(z, &mut rng)) <= 1.0 + 1e-7);
        }
        // Monotonicity: a 10% larger copy still covers.
        assert!(forward_certificate(z, &e.scaled(1.1).unwrap()).unwrap() <= 1e-7);
    }
}

#[test]
fn three_dimensional_fits_cover_vertices() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let a = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-0.7..0.7));
        let b = DMatrix::from_fn(3, 1, |_, _| rng.gen_range(-1.0..1.0));
        let sys = LtiSystem::new(a, b).unwrap();
        let zs = forward_reach(&sys, &boxed(&[-0.5], &[1.0]), 6).unwrap();
        for (z, f) in zs.iter().zip(fit_forward(&zs).unwrap()) {
            assert!(forward_certificate(z, &f.ellipsoid).unwrap() <= 1e-7);
        }
    }
}

#[test]
fn many_generators_fall_back_to_covariance_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let gens = DMatrix::from_fn(3, 20, |_, _| rng.gen_range(-1.0..1.0));
    let z = Zonotope::new(v(&[0.5, -1.0, 2.0]), gens).unwrap();
    let fit = &fit_forward(std::slice::from_ref(&z)).unwrap()[0];
    assert!(fit.from_bound);
    for _ in 0..2000 {
        assert!(fit.ellipsoid.gauge(&zonotope_sample(&z, &mut rng)) <= 1.0 + 1e-9);
    }
}

// ---- backward ----

#[test]
fn static_system_keeps_the_terminal_set() {
    let sys = LtiSystem::new(DMatrix::identity(2, 2), DMatrix::zeros(2, 1)).unwrap();
    let xn = HPolytope::from_rows(
        2,
        &[vec![1.0, 0.5], vec![-1.0, 0.2], vec![0.0, -1.0], vec![0.3, 1.0]],
        &[1.0, 1.0, 1.0, 1.5],
    )
    .unwrap();
    let hs = backward_reach(&sys, &double_integrator_input_set(), &xn, 4).unwrap();
    assert_eq!(hs.len(), 4);
    for h in &hs {
        assert!(h.implied_rows(&xn).unwrap().iter().all(|&b| b));
        assert!(xn.implied_rows(h).unwrap().iter().all(|&b| b));
    }
}

#[test]
fn scalar_integrator_widens_by_the_input_bound() {
    let sys = LtiSystem::new(DMatrix::identity(1, 1), DMatrix::identity(1, 1)).unwrap();
    let hs = backward_reach(&sys, &boxed(&[-1.0], &[1.0]), &boxed(&[-1.0], &[1.0]), 2).unwrap();
    let (lo, hi) = hs[0].bounding_box().unwrap();
    assert!((lo[0] + 2.0).abs() < 1e-12 && (hi[0] - 2.0).abs() < 1e-12);
    assert_eq!(hs[1], boxed(&[-1.0], &[1.0]));
}

#[test]
fn unreachable_terminal_set_is_an_error() {
    let sys = LtiSystem::new(DMatrix::zeros(1, 1), DMatrix::identity(1, 1)).unwrap();
    let r = backward_reach(&sys, &boxed(&[-1.0], &[1.0]), &boxed(&[5.0], &[6.0]), 3);
    assert!(matches!(r, Err(ReachError::EmptyBackward { step: 2 })));
}

/// `∃u ∈ U : Ax + Bu ∈ next`, by an LP in `u`.
fn has_admissible_input(sys: &LtiSystem, input: &HPolytope, next: &HPolytope, x: &DVector<f64>) -> bool {
    let c = next.coefficients() * sys.b();
    let d = next.offsets() - next.coefficients() * (sys.a() * x);
    let rows = HPolytope::new(c, d).unwrap().intersect(input).unwrap();
    lp_solve(&DVector::zeros(sys.n_inputs()), &rows).unwrap().status == LpStatus::Optimal
}

#[test]
fn benchmark_backward_samples_have_admissible_inputs() {
    let (p, _, geo) = benchmark();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sys = p.system();
    for i in 0..geo.backward.len() - 1 {
        let verts = geo.backward[i].vertices().unwrap();
        for _ in 0..500 {
            // Convex combination of a few vertices, kept off the boundary.
            let mut x = DVector::zeros(2);
            let mut total = 0.0;
            for _ in 0..4 {
                let w: f64 = rng.gen_range(0.0..1.0);
                x += &verts[rng.gen_range(0..verts.len())] * w;
                total += w;
            }
            let x = x / total;
            assert!(has_admissible_input(sys, p.input_set(), &geo.backward[i + 1], &x));
        }
        // And the converse on points just outside.
        let (lo, hi) = geo.backward[i].bounding_box().unwrap();
        let mut outside = 0;
        while outside < 50 {
            let x = DVector::from_fn(2, |k, _| rng.gen_range(lo[k] - 0.05..hi[k] + 0.05));
            if geo.backward[i].max_violation(&x) > 1e-7 {
                assert!(!has_admissible_input(sys, p.input_set(), &geo.backward[i + 1], &x));
                outside += 1;
            }
        }
    }
}

#[test]
fn terminal_set_lies_in_the_previous_backward_set() {
    let (p, _, geo) = benchmark();
    let n = geo.backward.len();
    assert_eq!(&geo.backward[n - 1], p.terminal_set());
    let implied = p.terminal_set().implied_rows(&geo.backward[n - 2]).unwrap();
    assert!(implied.iter().all(|&b| b));
}

#[test]
fn square_gets_the_inscribed_disc() {
    let sq = boxed(&[-1.0, -1.0], &[1.0, 1.0]);
    let fit = &fit_backward(std::slice::from_ref(&sq)).unwrap()[0];
    assert!(fit.inner.center().amax() < 1e-6);
    assert!((fit.inner.covariance() - DMatrix::identity(2, 2)).amax() < 1e-6);
    assert!((fit.outer.covariance() - DMatrix::identity(2, 2) * 2.0).amax() < 1e-6);
    assert!(inner_certificate(&sq, &fit.inner) <= 0.0);
}

#[test]
fn benchmark_backward_fits_certify() {
    let (_, sets, geo) = benchmark();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    assert_eq!(sets.backward_inner.len(), 11);
    for i in 0..sets.backward_inner.len() {
        let poly = &geo.backward[i];
        let inner = &sets.backward_inner[i];
        let outer = &sets.backward[i];
        assert!(inner_certificate(poly, inner) <= 0.0);
        assert!(inner_certificate(poly, &inner.scaled(0.5).unwrap()) <= 0.0);
        assert!(inner_certificate(poly, &inner.scaled(0.9).unwrap()) <= 0.0);
        assert!(outer_certificate(poly, outer).unwrap() <= 1e-7);
        assert!(outer_certificate(poly, &outer.scaled(1.1).unwrap()).unwrap() <= 1e-7);
        for _ in 0..1000 {
            assert!(poly.max_violation(&ellipsoid_sample(inner, &mut rng)) <= 1e-9);
        }
    }
}

#[test]
fn random_three_state_backward_fits_certify() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut done = 0;
    while done < 5 {
        let a = DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { rng.gen_range(-0.2..0.2) });
        let b = DMatrix::from_fn(3, 1, |_, _| rng.gen_range(-0.5..0.5));
        let sys = LtiSystem::new(a, b).unwrap();
        let xn = boxed(&[-0.5, -0.4, -0.6], &[0.5, 0.7, 0.3]);
        let Ok(hs) = backward_reach(&sys, &boxed(&[-1.0], &[1.0]), &xn, 3) else {
            continue;
        };
        for (h, f) in hs.iter().zip(fit_backward(&hs).unwrap()) {
            assert!(inner_certificate(h, &f.inner) <= 0.0);
            assert!(outer_certificate(h, &f.outer).unwrap() <= 1e-7);
        }
        done += 1;
    }
}

// ---- artifact ----

fn small_problem(horizon: usize) -> MpcProblem {
    let sys = double_integrator_system();
    let sets: Vec<HPolytope> = (0..horizon)
        .map(|i| {
            let w = if i + 1 == horizon { 0.5 } else { 3.0 };
            boxed(&[-w, -w], &[w, w])
        })
        .collect();
    let weights = CostWeights::new(DMatrix::identity(2, 2), DMatrix::identity(2, 2), DMatrix::identity(1, 1)).unwrap();
    MpcProblem::new(sys, horizon, sets, double_integrator_input_set(), weights, None).unwrap()
}

#[test]
fn benchmark_artifact_shape() {
    let (p, sets, _) = benchmark();
    let art = sets.to_artifact();
    assert_eq!(art.version, ARTIFACT_VERSION);
    assert_eq!(art.horizon, 12);
    assert_eq!(art.forward.len(), 12);
    assert_eq!(art.backward.len(), 11);
    assert_eq!(art.backward_inner.len(), 11);
    assert_eq!(art.problem_checksum, p.checksum());
    assert_eq!(art.row_norms.optimality.len(), 11);
    assert!(art.row_norms.forward.iter().all(|r| r.len() == 660));
}

#[test]
fn single_step_horizon_has_no_backward_fits() {
    let p = small_problem(1);
    let s = build_offline(&p, None).unwrap();
    assert_eq!(s.forward.len(), 1);
    assert!(s.backward.is_empty() && s.backward_inner.is_empty());
    assert!(s.norms.forward.is_empty());
}

#[test]
fn artifact_round_trip_and_determinism() {
    let p = small_problem(4);
    let delta = boxed(&[-0.3], &[0.3]);
    let a = build_offline(&p, Some(&delta)).unwrap();
    let b = build_offline(&p, Some(&delta)).unwrap();
    let bytes = a.to_json().unwrap();
    assert_eq!(bytes, b.to_json().unwrap());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("offline.json");
    a.save(&path).unwrap();
    let back = OfflineSets::load(&path, &p).unwrap();
    assert_eq!(back.to_json().unwrap(), bytes);
    assert_eq!(back.forward, a.forward);
    assert_eq!(back.forward_delta.as_ref().unwrap().fits.len(), 4);
}

#[test]
fn artifact_for_another_problem_is_refused() {
    let p = small_problem(3);
    let q = small_problem(4);
    let art = build_offline(&p, None).unwrap().to_artifact();
    assert!(matches!(
        OfflineSets::from_artifact(&art, &q),
        Err(ReachError::ChecksumMismatch { .. })
    ));
    let mut bumped = art.clone();
    bumped.version = 2;
    assert!(matches!(
        OfflineSets::from_artifact(&bumped, &p),
        Err(ReachError::Version { found: 2, .. })
    ));
    let mut text = serde_json::to_value(&art).unwrap();
    text["extra"] = serde_json::json!(1);
    assert!(serde_json::from_value::<campc_reach::OfflineArtifact>(text).is_err());
}

#[test]
fn stored_norms_match_support_radii() {
    let p = small_problem(4);
    let s = build_offline(&p, None).unwrap();
    for step in 1..4 {
        let set = p.state_set(step);
        for j in 0..set.n_rows() {
            let c = set.row(j);
            let want = (s.backward[step - 1].shape_inv().transpose() * &c).norm();
            assert!((s.norms.backward[step - 1][j] - want).abs() <= 1e-12 * (1.0 + want));
            let dir = (p.rows_in_inputs(step).row(j) * p.g_inv()).norm();
            assert!((s.norms.optimality[step - 1][j] - dir).abs() <= 1e-12 * (1.0 + dir));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_planar_forward_fits_cover(
        a in proptest::collection::vec(-1.0f64..1.0, 4),
        b in proptest::collection::vec(-1.0f64..1.0, 2),
        hi in 0.1f64..2.0,
        steps in 1usize..8,
    ) {
        let sys = LtiSystem::new(DMatrix::from_row_slice(2, 2, &a), DMatrix::from_row_slice(2, 1, &b)).unwrap();
        let zs = forward_reach(&sys, &boxed(&[-hi * 0.5], &[hi]), steps).unwrap();
        for (z, f) in zs.iter().zip(fit_forward(&zs).unwrap()) {
            prop_assert!(forward_certificate(z, &f.ellipsoid).unwrap() <= 1e-7);
        }
    }
}
