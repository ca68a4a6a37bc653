use iga_contact::bench::output::{convergence_csv, profile_csv};
use iga_contact::bench::{
    bisect, error_norms, fit_rate, hertz_solution, run_benchmark, scenario_mesh, BenchOptions, LevelSolution, Scenario,
};
use iga_contact::contact::{build_projection, ActiveSet, AugmentedParams, RigidPlane};
use iga_contact::geometry::shapes::CONTACT_FACE;
use iga_contact::geometry::unit_box;
use iga_contact::solver::{SolveReport, SystemState};
use iga_contact::spaces::{build_dual, build_primal};
use iga_contact::splines::KnotVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Solution on the unit square with the displacement `(f(x, y), 0)` given
/// by its control coefficients and a constant multiplier.
fn square_solution(p: usize, n: usize, coef: impl Fn(usize, usize, &KnotVector) -> f64, lambda: f64) -> LevelSolution {
    let kv = KnotVector::uniform(p, n).unwrap();
    let patch = unit_box(vec![kv.clone(), kv.clone()]).unwrap();
    let space = build_primal(&patch, &[]).unwrap();
    let dual = build_dual(&patch, CONTACT_FACE).unwrap();
    let plane = RigidPlane::new([-1.0, 0.0, 0.0], -2.0).unwrap();
    let proj = build_projection(&space, &dual, &plane, p + 1).unwrap();
    let nb = kv.num_basis();
    let mut u = vec![0.0; space.n_dofs()];
    for j in 0..nb {
        for i in 0..nb {
            let cp = j * nb + i;
            u[space.dof_index(cp, 0)] = coef(i, j, &kv);
        }
    }
    let state = SystemState { u, lambda: vec![lambda; dual.len()], active: ActiveSet::all(dual.len(), false), load_factor: 1.0 };
    LevelSolution {
        level: 0,
        h: patch.mesh_size().unwrap(),
        space,
        dual,
        proj,
        params: AugmentedParams::new(1.0, 1.0).unwrap(),
        state,
        report: SolveReport::default(),
    }
}

/// Greville abscissa: coefficients of `x` (and of `y`).
fn greville(i: usize, kv: &KnotVector) -> f64 {
    kv.greville()[i]
}

/// Quadratic blossom `t_{i+1} t_{i+2}`: coefficients of `y^2` for `p = 2`.
fn square_blossom(i: usize, kv: &KnotVector) -> f64 {
    kv.knots()[i + 1] * kv.knots()[i + 2]
}

#[test]
fn identical_states_have_zero_error() {
    let a = square_solution(2, 3, |i, _, kv| greville(i, kv), -0.5);
    let b = square_solution(2, 3, |i, _, kv| greville(i, kv), -0.5);
    let e = error_norms(&a, &b, None).unwrap();
    assert_eq!((e.l2_disp, e.h1_disp, e.l2_mult_refined), (0.0, 0.0, 0.0));
    assert!(e.l2_mult_analytical.is_nan());
}

#[test]
fn constant_offset_error() {
    let c = 0.75;
    let a = square_solution(2, 2, |i, _, kv| greville(i, kv) + c, 0.0);
    let b = square_solution(2, 4, |i, _, kv| greville(i, kv), 1.0);
    let e = error_norms(&a, &b, None).unwrap();
    assert!((e.l2_disp - c).abs() < 1e-13);
    assert!(e.h1_disp.abs() < 1e-12);
    assert!((e.l2_mult_refined - 1.0).abs() < 1e-13);
}

#[test]
fn manufactured_field_errors() {
    // coarse (x, 0) against reference (x + y^2, 0)
    let a = square_solution(2, 2, |i, _, kv| greville(i, kv), 0.0);
    let b = square_solution(2, 4, |i, j, kv| greville(i, kv) + square_blossom(j, kv), 0.0);
    let e = error_norms(&a, &b, None).unwrap();
    assert!((e.l2_disp - (1.0f64 / 5.0).sqrt()).abs() < 1e-12, "{}", e.l2_disp);
    assert!((e.h1_disp - (4.0f64 / 3.0).sqrt()).abs() < 1e-12, "{}", e.h1_disp);
}

#[test]
fn non_nested_reference_is_rejected() {
    let a = square_solution(2, 3, |i, _, kv| greville(i, kv), 0.0);
    let b = square_solution(2, 4, |i, _, kv| greville(i, kv), 0.0);
    assert!(error_norms(&a, &b, None).is_err());
}

#[test]
fn rate_fit_tolerates_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for q in [0.5, 1.0, 1.5, 2.0, 3.0] {
        let pairs: Vec<(f64, f64)> =
            (0..6).map(|k| 0.4 / 2f64.powi(k)).map(|h| (h, 3.0 * h.powf(q) * (1.0 + rng.random_range(-0.02..0.02)))).collect();
        let rate = fit_rate(&pairs).unwrap();
        assert!((rate - q).abs() < 0.03, "q={q} rate={rate}");
    }
    assert!((fit_rate(&[(0.1, 0.01), (0.05, 0.0025)]).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn hertz_constants() {
    // reference values, compared to half a unit in their last digit
    let cases = [
        (2, 0.003, (0.083378, 6), (0.045812, 6)),
        (2, 0.01, (0.15223, 5), (0.083641, 6)),
        (3, 5e-4, (0.10235, 5), (0.0716, 4)),
    ];
    for (dim, p, (a, da), (p0, dp)) in cases {
        let h = hertz_solution(dim, 1.0, 1.0, 0.3, p).unwrap();
        assert!((h.a - a).abs() <= 0.5 * 10f64.powi(-da), "a {} vs {a}", h.a);
        assert!((h.p0 - p0).abs() <= 0.5 * 10f64.powi(-dp), "p0 {} vs {p0}", h.p0);
    }
    let s = Scenario::Hertz2dP003.hertz().unwrap();
    assert!((s.pressure_at(s.a / 2.0) - s.p0 * 0.75f64.sqrt()).abs() < 1e-15);
}

#[test]
fn nested_levels_share_breakpoints() {
    for sc in Scenario::ALL {
        let g = sc.default_grading();
        let coarse = scenario_mesh(sc, 2, &g, 0).unwrap().breakpoints();
        let fine = scenario_mesh(sc, 2, &g, 2).unwrap().breakpoints();
        for (c, f) in coarse.iter().zip(&fine) {
            assert_eq!(f.len() - 1, 4 * (c.len() - 1));
            assert!(c.iter().all(|b| f.contains(b)));
        }
    }
    assert_eq!(bisect(&[0.0, 0.9, 1.0], 1), vec![0.0, 0.45, 0.9, 0.95, 1.0]);
}

#[test]
fn benchmark_output_is_deterministic() {
    let opts = BenchOptions::new(2, 2);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let r = run_benchmark(Scenario::Hertz2dP003, &opts).unwrap();
            (convergence_csv(&r.table), profile_csv(&r.profile, r.hertz.as_ref()))
        })
    };
    let first = run(1);
    assert_eq!(first, run(1));
    assert_eq!(first, run(3));
    assert_eq!(first.0.lines().count(), 4);
}

#[test]
fn bad_degree_is_a_config_error() {
    let err = run_benchmark(Scenario::Hertz2dP003, &BenchOptions::new(5, 2)).err().unwrap();
    assert!(err.to_string().contains("degree"), "{err}");
}
