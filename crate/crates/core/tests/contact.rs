use iga_contact::bench::{fit_rate, scenario_mesh, Scenario};
use iga_contact::contact::{
    build_projection, contact_energy, contact_residual, contact_tangent, neg_part, project, update_active_set,
    AugmentedParams, ProjectionData, RigidPlane,
};
use iga_contact::elasticity::assemble_linear;
use iga_contact::geometry::shapes::{make_quarter_disc, CONTACT_FACE};
use iga_contact::spaces::{build_dual, build_primal, face_rule, DualSpace, PrimalSpace};
use iga_contact::sparse::Csr;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Fixture {
    space: PrimalSpace,
    dual: DualSpace,
    proj: ProjectionData,
    params: AugmentedParams,
}

fn fixture(sc: Scenario, p: usize, level: usize) -> Fixture {
    let patch = scenario_mesh(sc, p, &sc.default_grading(), level).unwrap();
    let space = build_primal(&patch, &[]).unwrap();
    let dual = build_dual(&patch, CONTACT_FACE).unwrap();
    let n = if sc.dim() == 2 { [0.0, 1.0, 0.0] } else { [0.0, 0.0, 1.0] };
    let plane = RigidPlane::new(n, -sc.radius()).unwrap();
    let proj = build_projection(&space, &dual, &plane, p + 1).unwrap();
    let h = patch.face_mesh_size(CONTACT_FACE).unwrap();
    let params = AugmentedParams::new(100.0 * sc.material().young, h).unwrap();
    Fixture { space, dual, proj, params }
}

/// State with a mix of active and inactive multipliers, none near the
/// switching surface.
fn random_state(f: &Fixture, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let u: Vec<f64> = (0..f.space.n_dofs()).map(|_| rng.random_range(-1e-3..1e-3)).collect();
    let g = f.proj.projected_gap(&u);
    let lambda: Vec<f64> = g
        .iter()
        .map(|gk| {
            let target = if rng.random_bool(0.5) { -1.0 } else { 1.0 } * rng.random_range(0.05..1.0);
            target - f.params.r * gk
        })
        .collect();
    (u, lambda)
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-300);
    num / den
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn negative_part_inequalities_on_a_million_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..1_000_000 {
        let scale = 10f64.powi(rng.random_range(-6..6));
        let (a, b): (f64, f64) = if i % 10 == 0 {
            // exact ties and sign boundaries
            let a = (rng.random_range(-4..4) as f64) * scale;
            (a, if i % 20 == 0 { a } else { 0.0 })
        } else {
            (rng.random_range(-1.0..1.0) * scale, rng.random_range(-1.0..1.0) * scale)
        };
        let d = neg_part(a) - neg_part(b);
        assert!(d * d <= d * (a - b), "a={a} b={b}");
        assert!(d.abs() <= (a - b).abs(), "a={a} b={b}");
    }
}

#[test]
fn projection_reproduces_constants() {
    for (sc, p) in [(Scenario::Hertz2dP003, 2), (Scenario::Hertz2dP003, 3), (Scenario::Hertz3dP5e4, 2), (Scenario::Hertz3dP5e4, 3)] {
        let f = fixture(sc, p, 1);
        for c in [1.0, -3.25, 1e-4] {
            let v = project(&f.space, &f.dual, |_| c, p + 1).unwrap();
            assert!(v.iter().all(|x| (x - c).abs() <= 1e-13 * c.abs().max(1.0)), "{sc} p={p}");
        }
    }
}

/// `|| v - Pi v ||_{0, arc}` for a smooth field on the quarter-disc arc.
fn projection_error(p: usize, levels: usize) -> (f64, f64) {
    let patch = make_quarter_disc(1.0).unwrap().elevate_bezier(&[p, p]).unwrap().refine_uniform(levels).unwrap();
    let space = build_primal(&patch, &[]).unwrap();
    let dual = build_dual(&patch, CONTACT_FACE).unwrap();
    let v = |x: &[f64; 3]| (3.0 * x[0]).sin() + x[1] * x[1];
    let pv = project(&space, &dual, v, p + 2).unwrap();
    let rule = face_rule(&patch, CONTACT_FACE, p + 3).unwrap();
    let mut err = 0.0;
    for e in &rule.elements {
        for (t, w) in e.points.iter().zip(&e.weights) {
            let fr = patch.boundary_frame(CONTACT_FACE, t).unwrap();
            let ph: f64 = dual.eval(t).unwrap().iter().map(|(k, b)| b * pv[*k]).sum();
            err += w * fr.measure * (v(&fr.x) - ph).powi(2);
        }
    }
    (patch.face_mesh_size(CONTACT_FACE).unwrap(), err.sqrt())
}

#[test]
fn projection_error_decays_at_least_linearly() {
    for p in [2, 3] {
        let pairs: Vec<(f64, f64)> = (2..6).map(|l| projection_error(p, l)).collect();
        // first-order estimate: e / h stays bounded and the slope tends to one
        let rate = fit_rate(&pairs[pairs.len() - 2..]).unwrap();
        assert!(rate >= 0.99, "p={p} rate={rate} {pairs:?}");
        let ratios: Vec<f64> = pairs.iter().map(|(h, e)| e / h).collect();
        assert!(ratios.iter().all(|&c| c <= 1.02 * ratios[0]), "p={p} {ratios:?}");
        assert!(pairs.windows(2).all(|w| w[1].1 < w[0].1));
    }
}

#[test]
fn tangent_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (sc, p) in [(Scenario::Hertz2dP003, 2), (Scenario::Hertz2dP003, 3), (Scenario::Hertz3dP5e4, 3)] {
        let f = fixture(sc, p, 0);
        let (u, lambda) = random_state(&f, &mut rng);
        let active = update_active_set(&lambda, &f.proj.projected_gap(&u), &f.params);
        assert!(active.count() > 0 && active.count() < active.len());
        let t = contact_tangent(&f.proj, &f.params, &active);
        let du: Vec<f64> = (0..u.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dl: Vec<f64> = (0..lambda.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let eps = 1e-7;
        let shifted = |s: f64| {
            let up: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + s * eps * b).collect();
            let lp: Vec<f64> = lambda.iter().zip(&dl).map(|(a, b)| a + s * eps * b).collect();
            contact_residual(&f.proj, &up, &lp, &f.params, &active)
        };
        let (ru_p, rl_p) = shifted(1.0);
        let (ru_m, rl_m) = shifted(-1.0);
        let fd_u: Vec<f64> = ru_p.iter().zip(&ru_m).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        let fd_l: Vec<f64> = rl_p.iter().zip(&rl_m).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        let an_u: Vec<f64> = t.uu.mul_vec(&du).iter().zip(t.ul.mul_vec(&dl)).map(|(a, b)| a + b).collect();
        let an_l: Vec<f64> = t
            .ul
            .mul_vec_transpose(&du)
            .iter()
            .zip(&t.ll)
            .zip(&dl)
            .map(|((a, d), l)| a + d * l)
            .collect();
        assert!(rel_err(&fd_u, &an_u) < 1e-6, "{sc} p={p} u-rows {}", rel_err(&fd_u, &an_u));
        assert!(rel_err(&fd_l, &an_l) < 1e-6, "{sc} p={p} lambda-rows {}", rel_err(&fd_l, &an_l));
    }
}

#[test]
fn residual_is_the_energy_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (sc, p) in [(Scenario::Hertz2dP003, 2), (Scenario::Hertz2dP01, 3), (Scenario::Hertz3dP5e4, 2)] {
        let f = fixture(sc, p, 0);
        for _ in 0..5 {
            let (u, lambda) = random_state(&f, &mut rng);
            let active = update_active_set(&lambda, &f.proj.projected_gap(&u), &f.params);
            let (ru, rl) = contact_residual(&f.proj, &u, &lambda, &f.params, &active);
            let du: Vec<f64> = (0..u.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let dl: Vec<f64> = (0..lambda.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let eps = 1e-7;
            let energy = |s: f64| {
                let up: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + s * eps * b).collect();
                let lp: Vec<f64> = lambda.iter().zip(&dl).map(|(a, b)| a + s * eps * b).collect();
                contact_energy(&f.proj, &up, &lp, &f.params)
            };
            let fd = (energy(1.0) - energy(-1.0)) / (2.0 * eps);
            let an = dot(&ru, &du) + dot(&rl, &dl);
            assert!((fd - an).abs() <= 1e-6 * an.abs(), "{sc} p={p} fd={fd} an={an}");
        }
    }
}

/// `(B(x1) - B(x2); x1 - x2)` for the linear elastic operator plus contact.
fn operator_pairing(f: &Fixture, k: &Csr, x1: &(Vec<f64>, Vec<f64>), x2: &(Vec<f64>, Vec<f64>)) -> (f64, f64) {
    let apply = |x: &(Vec<f64>, Vec<f64>)| {
        let active = update_active_set(&x.1, &f.proj.projected_gap(&x.0), &f.params);
        let (ru, rl) = contact_residual(&f.proj, &x.0, &x.1, &f.params, &active);
        let ku = k.mul_vec(&x.0);
        (ku.iter().zip(&ru).map(|(a, b)| a + b).collect::<Vec<f64>>(), rl)
    };
    let (b1u, b1l) = apply(x1);
    let (b2u, b2l) = apply(x2);
    let du: Vec<f64> = x1.0.iter().zip(&x2.0).map(|(a, b)| a - b).collect();
    let dl: Vec<f64> = x1.1.iter().zip(&x2.1).map(|(a, b)| a - b).collect();
    let dbu: Vec<f64> = b1u.iter().zip(&b2u).map(|(a, b)| a - b).collect();
    let dbl: Vec<f64> = b1l.iter().zip(&b2l).map(|(a, b)| a - b).collect();
    let pairing = dot(&dbu, &du) + dot(&dbl, &dl);

    // same quantity rebuilt from its three parts
    let c = |x: &(Vec<f64>, Vec<f64>)| -> Vec<f64> {
        let g = f.proj.projected_gap(&x.0);
        x.1.iter().zip(&g).map(|(l, gk)| l + f.params.r * gk).collect()
    };
    let (c1, c2) = (c(x1), c(x2));
    let m = f.proj.measures();
    let r = f.params.r;
    let mut split = dot(&k.mul_vec(&du), &du);
    for kk in 0..m.len() {
        let dneg = neg_part(c1[kk]) - neg_part(c2[kk]);
        split += m[kk] / r * (dneg * (c1[kk] - c2[kk]) - dl[kk] * dl[kk]);
    }
    (pairing, split)
}

#[test]
fn discrete_operator_is_monotone_at_default_r0() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (sc, p) in [(Scenario::Hertz2dP003, 2), (Scenario::Hertz2dP003, 3), (Scenario::Hertz3dP5e4, 2)] {
        let f = fixture(sc, p, 0);
        let material = sc.material();
        let k = assemble_linear(&f.space, &material, p + 1).unwrap();
        let p0 = sc.hertz().unwrap().p0;
        for _ in 0..100 {
            let mut draw = || {
                let u: Vec<f64> = (0..f.space.n_dofs()).map(|_| rng.random_range(-1e-2..1e-2)).collect();
                let l: Vec<f64> = (0..f.proj.len()).map(|_| rng.random_range(-2.0 * p0..p0)).collect();
                (u, l)
            };
            let (x1, x2) = (draw(), draw());
            let (pairing, split) = operator_pairing(&f, &k, &x1, &x2);
            assert!((pairing - split).abs() <= 1e-10 * pairing.abs().max(1e-300), "{sc} p={p}");
            assert!(pairing >= 0.0, "{sc} p={p} pairing={pairing}");
        }
    }
}

#[test]
fn projected_gap_is_affine_in_displacement() {
    let f = fixture(Scenario::Hertz2dP003, 3, 0);
    let n = f.space.n_dofs();
    let g0 = f.proj.projected_gap(&vec![0.0; n]);
    // rigid translation along the plane normal shifts every gap by the same amount
    let mut u = vec![0.0; n];
    for i in (1..n).step_by(2) {
        u[i] = 0.125;
    }
    let g = f.proj.projected_gap(&u);
    assert!(g.iter().zip(&g0).all(|(a, b)| (a - b - 0.125).abs() < 1e-13));
    assert!(g0.iter().all(|&x| x >= -1e-14));
    let init = f.proj.initial_active_set();
    assert!(init.is_active(0) && init.count() < init.len());
}

proptest! {
    #[test]
    fn negative_part_properties(a in -1e6f64..1e6, b in -1e6f64..1e6) {
        let d = neg_part(a) - neg_part(b);
        prop_assert!(d * d <= d * (a - b));
        prop_assert!(d.abs() <= (a - b).abs());
        prop_assert!(neg_part(a) <= 0.0 && neg_part(a) <= a);
    }
}
