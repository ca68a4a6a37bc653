use faer::{Mat, Side as EigSide};
use iga_contact::bench::{scenario_mesh, Scenario};
use iga_contact::elasticity::{
    assemble_linear, assemble_neo_hookean, assemble_neumann_pressure, eval_stress, neo_hookean_energy, Material,
};
use iga_contact::geometry::{unit_box, Face, Side};
use iga_contact::solver::linear_solve;
use iga_contact::spaces::{build_primal, DirichletBc, PrimalSpace};
use iga_contact::sparse::{Csr, Triplets};
use iga_contact::splines::KnotVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scenario_space(sc: Scenario, p: usize) -> PrimalSpace {
    build_primal(&scenario_mesh(sc, p, &sc.default_grading(), 0).unwrap(), &[]).unwrap()
}

fn random_small(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn neo_hookean_residual_is_energy_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mat = Material::neo_hookean(1.0, 0.3).unwrap();
    for (sc, p) in [(Scenario::Hertz2dLargeUy04, 2), (Scenario::Hertz2dLargeUy04, 3), (Scenario::Hertz3dP5e4, 2)] {
        let s = scenario_space(sc, p);
        let u = random_small(s.n_dofs(), 1e-3, &mut rng);
        let (r, _) = assemble_neo_hookean(&s, &mat, p + 1, &u).unwrap();
        let du = random_small(s.n_dofs(), 1.0, &mut rng);
        let eps = 1e-6;
        let shift = |t: f64| -> Vec<f64> { u.iter().zip(&du).map(|(a, b)| a + t * eps * b).collect() };
        let fd = (neo_hookean_energy(&s, &mat, p + 1, &shift(1.0)).unwrap()
            - neo_hookean_energy(&s, &mat, p + 1, &shift(-1.0)).unwrap())
            / (2.0 * eps);
        let an: f64 = r.iter().zip(&du).map(|(a, b)| a * b).sum();
        assert!((fd - an).abs() <= 1e-5 * an.abs(), "{sc} p={p} fd={fd} an={an}");
    }
}

#[test]
fn neo_hookean_tangent_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mat = Material::neo_hookean(1.0, 0.3).unwrap();
    for (sc, p) in [(Scenario::Hertz2dLargeUy04, 2), (Scenario::Hertz2dLargeUy04, 3), (Scenario::Hertz3dP5e4, 2)] {
        let s = scenario_space(sc, p);
        let u = random_small(s.n_dofs(), 2e-3, &mut rng);
        let (_, k) = assemble_neo_hookean(&s, &mat, p + 1, &u).unwrap();
        assert!(k.asymmetry() <= 1e-12 * k.max_abs());
        let du = random_small(s.n_dofs(), 1.0, &mut rng);
        let eps = 1e-6;
        let shift = |t: f64| -> Vec<f64> { u.iter().zip(&du).map(|(a, b)| a + t * eps * b).collect() };
        let (rp, _) = assemble_neo_hookean(&s, &mat, p + 1, &shift(1.0)).unwrap();
        let (rm, _) = assemble_neo_hookean(&s, &mat, p + 1, &shift(-1.0)).unwrap();
        let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        let an = k.mul_vec(&du);
        let diff: Vec<f64> = fd.iter().zip(&an).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) <= 1e-5 * norm(&an), "{sc} p={p} {}", norm(&diff) / norm(&an));
    }
}

#[test]
fn neo_hookean_linearises_to_hooke() {
    let s = scenario_space(Scenario::Hertz2dP003, 2);
    let lin = assemble_linear(&s, &Material::linear(1.0, 0.3).unwrap(), 3).unwrap();
    let (r, k) = assemble_neo_hookean(&s, &Material::neo_hookean(1.0, 0.3).unwrap(), 3, &vec![0.0; s.n_dofs()]).unwrap();
    assert!(norm(&r) < 1e-14);
    let mut worst: f64 = 0.0;
    for (i, j, v) in lin.triplets() {
        worst = worst.max((k.get(i, j) - v).abs());
    }
    assert!(worst <= 1e-12 * lin.max_abs());
}

fn zero_eigenvalues(k: &Csr) -> usize {
    let n = k.nrows();
    let m = Mat::<f64>::from_fn(n, n, |i, j| k.get(i, j));
    let eig = m.self_adjoint_eigenvalues(EigSide::Lower).unwrap();
    let top = eig.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    assert!(eig.iter().all(|&e| e > -1e-10 * top), "stiffness must be positive semidefinite");
    eig.iter().filter(|e| e.abs() < 1e-10 * top).count()
}

#[test]
fn rigid_body_kernel_dimensions() {
    let mat = Material::linear(1.0, 0.3).unwrap();
    let s2 = scenario_space(Scenario::Hertz2dP003, 2);
    assert_eq!(zero_eigenvalues(&assemble_linear(&s2, &mat, 3).unwrap()), 3);
    let s2 = scenario_space(Scenario::Hertz2dP003, 3);
    assert_eq!(zero_eigenvalues(&assemble_linear(&s2, &mat, 4).unwrap()), 3);
    let kv = KnotVector::uniform(2, 2).unwrap();
    let cube = unit_box(vec![kv.clone(), kv.clone(), kv]).unwrap();
    let s3 = build_primal(&cube, &[]).unwrap();
    assert_eq!(zero_eigenvalues(&assemble_linear(&s3, &mat, 3).unwrap()), 6);
}

/// Restriction of a full-DOF matrix to the free DOFs.
fn free_block(s: &PrimalSpace, k: &Csr) -> Csr {
    let mut map = vec![usize::MAX; s.n_dofs()];
    for (f, &full) in s.free_to_full().iter().enumerate() {
        map[full] = f;
    }
    let mut t = Triplets::new(s.n_free(), s.n_free());
    for (i, j, v) in k.triplets() {
        if map[i] != usize::MAX && map[j] != usize::MAX {
            t.push(map[i], map[j], v);
        }
    }
    t.to_csr()
}

#[test]
fn uniform_compression_patch_test() {
    let pressure = 0.01;
    let mat = Material::linear(2.0, 0.25).unwrap();
    for p in [2, 3] {
        let kx = KnotVector::uniform(p, 3).unwrap();
        let ky = KnotVector::from_breakpoints(p, &[0.0, 0.2, 0.7, 1.0]).unwrap();
        let patch = unit_box(vec![kx, ky]).unwrap();
        let bcs = [DirichletBc::symmetry(Face::new(0, Side::Low), 0), DirichletBc::symmetry(Face::new(1, Side::Low), 1)];
        let s = build_primal(&patch, &bcs).unwrap();
        let k = assemble_linear(&s, &mat, p + 1).unwrap();
        let f = assemble_neumann_pressure(&s, Face::new(1, Side::High), pressure, p + 1).unwrap();
        let u = s.expand(&linear_solve(&free_block(&s, &k), &s.restrict(&f)).unwrap(), 1.0);
        for xi in [[0.1, 0.1], [0.5, 0.33], [0.9, 0.95], [0.25, 0.75]] {
            let sig = eval_stress(&s, &mat, &u, &xi).unwrap();
            assert!((sig[1][1] + pressure).abs() < 1e-8, "p={p} {sig:?}");
            assert!(sig[0][0].abs() < 1e-8 && sig[0][1].abs() < 1e-8);
        }
    }
}

#[test]
fn pressure_resultant_on_the_quarter_disc_top() {
    let sc = Scenario::Hertz2dP01;
    let s = scenario_space(sc, 2);
    let f = assemble_neumann_pressure(&s, Face::new(1, Side::High), 0.01, 3).unwrap();
    let fy: f64 = f.iter().skip(1).step_by(2).sum();
    let fx: f64 = f.iter().step_by(2).sum();
    assert!((fy + 0.01 * sc.radius()).abs() < 1e-14);
    assert!(fx.abs() < 1e-14);
}
