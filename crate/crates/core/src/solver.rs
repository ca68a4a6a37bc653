//! Semismooth Newton solver for the contact saddle-point system.
//!
//! Unknowns are the free displacement DOFs followed by all multipliers.
//! Each iteration evaluates the residual on the current active set, checks
//! convergence, solves with the exact tangent of that branch, and then
//! recomputes the active set from the new iterate.

use std::time::{Duration, Instant};

use faer::linalg::solvers::Solve;
use faer::linalg::solvers::PartialPivLu;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::linalg::LltError;
use faer::sparse::{SparseColMat, SparseColMatRef, SymbolicSparseColMatRef, Triplet};
use faer::{Mat, Side};

use crate::contact::{contact_residual, contact_tangent, update_active_set, ActiveSet, AugmentedParams, ProjectionData};
use crate::elasticity::{assemble_linear, assemble_neo_hookean, Material, Model};
use crate::error::{Error, Result};
use crate::sparse::{Csr, Triplets};
use crate::spaces::{Dof, PrimalSpace};

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_iter: usize,
    /// Load steps for the finite-deformation path.
    pub load_steps: usize,
    /// Maximum consecutive step cuts before giving up.
    pub max_cuts: usize,
    pub cut_factor: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig { rtol: 1e-10, atol: 1e-12, max_iter: 50, load_steps: 10, max_cuts: 5, cut_factor: 0.5 }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::config("tolerance", "tolerances must be positive"));
        }
        if self.max_iter == 0 || self.load_steps == 0 {
            return Err(Error::config("max_iter", "iteration and step counts must be positive"));
        }
        if !(self.cut_factor > 0.0 && self.cut_factor < 1.0) {
            return Err(Error::config("cut_factor", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    /// Full displacement coefficients (constrained entries included).
    pub u: Vec<f64>,
    pub lambda: Vec<f64>,
    pub active: ActiveSet,
    pub load_factor: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    /// Newton iterations of each accepted load step.
    pub iterations: Vec<usize>,
    /// Residual norms of each accepted load step.
    pub residuals: Vec<Vec<f64>>,
    pub active_count: usize,
    pub step_cuts: usize,
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn total_iterations(&self) -> usize {
        self.iterations.iter().sum()
    }

    pub fn last_residual(&self) -> f64 {
        self.residuals.last().and_then(|r| r.last()).copied().unwrap_or(f64::NAN)
    }
}

/// Everything that defines one contact problem.
pub struct ContactProblem<'a> {
    pub space: &'a PrimalSpace,
    pub proj: &'a ProjectionData,
    pub material: Material,
    pub params: AugmentedParams,
    /// External load over full DOFs at load factor one.
    pub f_ext: Vec<f64>,
    pub n_quad: usize,
}

/// Solves a sparse square system by LU with partial pivoting and checks the
/// relative residual.
pub fn linear_solve(a: &Csr, b: &[f64]) -> Result<Vec<f64>> {
    linear_solve_classified(a, b, |i| format!("unknown {i}"))
}

fn linear_solve_classified(a: &Csr, b: &[f64], class: impl Fn(usize) -> String) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::InvalidInput(format!("system is {}x{} with rhs of length {}", n, a.ncols(), b.len())));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let bnorm = l2(b);
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let trip: Vec<Triplet<usize, usize, f64>> = a.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
        .map_err(|e| Error::InvalidInput(format!("sparse matrix construction failed: {e:?}")))?;
    let lu = m.sp_lu().map_err(|_| Error::SingularSystem { index: 0, dof_class: class(0) })?;
    let rhs = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
    let mut x: Vec<f64> = {
        let s = lu.solve(&rhs);
        (0..n).map(|i| s[(i, 0)]).collect()
    };
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::SingularSystem { index: i, dof_class: class(i) });
    }
    let mut res = residual_vec(a, &x, b);
    let mut rel = l2(&res) / bnorm;
    for _ in 0..3 {
        if rel < 1e-13 {
            break;
        }
        let rm = Mat::<f64>::from_fn(n, 1, |i, _| res[i]);
        let dx = lu.solve(&rm);
        let cand: Vec<f64> = (0..n).map(|i| x[i] + dx[(i, 0)]).collect();
        let cres = residual_vec(a, &cand, b);
        let crel = l2(&cres) / bnorm;
        if !(crel < rel) {
            break;
        }
        x = cand;
        res = cres;
        rel = crel;
    }
    if !(rel < 1e-9) {
        return Err(Error::InaccurateSolve { residual: rel });
    }
    Ok(x)
}

fn residual_vec(a: &Csr, x: &[f64], b: &[f64]) -> Vec<f64> {
    a.mul_vec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
}

pub(crate) fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Saddle-point system over `[free u; lambda]` in block form
/// `[[A, B], [B^T, diag(d)]]`.
pub struct SaddleSystem {
    /// Displacement block on free DOFs.
    pub a: Csr,
    /// Free displacement rows against multiplier columns.
    pub b: Csr,
    /// Multiplier diagonal.
    pub d: Vec<f64>,
    pub residual: Vec<f64>,
}

impl SaddleSystem {
    pub fn len(&self) -> usize {
        self.a.nrows() + self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The whole matrix as one CSR.
    pub fn matrix(&self) -> Csr {
        let nf = self.a.nrows();
        let n = self.len();
        let mut t = Triplets::with_capacity(n, n, self.a.nnz() + 2 * self.b.nnz() + self.d.len());
        for (i, j, v) in self.a.triplets() {
            t.push(i, j, v);
        }
        for (i, k, v) in self.b.triplets() {
            t.push(i, nf + k, v);
            t.push(nf + k, i, v);
        }
        for (k, &v) in self.d.iter().enumerate() {
            t.push(nf + k, nf + k, v);
        }
        t.to_csr()
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let nf = self.a.nrows();
        let (xu, xl) = x.split_at(nf);
        let mut y = self.a.mul_vec(xu);
        for (yi, bi) in y.iter_mut().zip(self.b.mul_vec(xl)) {
            *yi += bi;
        }
        let bt = self.b.mul_vec_transpose(xu);
        y.extend(bt.iter().zip(&self.d).zip(xl).map(|((b, d), l)| b + d * l));
        y
    }
}

/// Factorisation of a saddle system: sparse Cholesky of the displacement
/// block and a dense Schur complement on the multipliers coupled to it.
struct BlockFactor {
    llt: Llt<usize, f64>,
    /// Multipliers with a nonzero coupling column.
    coupled: Vec<usize>,
    /// `A^{-1} B` restricted to the coupled columns.
    ainv_b: Mat<f64>,
    schur: PartialPivLu<f64>,
}

impl BlockFactor {
    /// `None` when the displacement block is not positive definite.
    fn new(sys: &SaddleSystem, class: &impl Fn(usize) -> String) -> Result<Option<Self>> {
        let nf = sys.a.nrows();
        let (row_ptr, cols, vals) = sys.a.parts();
        // rows of a symmetric CSR are its CSC columns; keep the lower part
        let mut col_ptr = Vec::with_capacity(nf + 1);
        let mut row_idx = Vec::with_capacity(vals.len() / 2 + nf);
        let mut lower = Vec::with_capacity(vals.len() / 2 + nf);
        col_ptr.push(0);
        for j in 0..nf {
            for p in row_ptr[j]..row_ptr[j + 1] {
                if cols[p] >= j {
                    row_idx.push(cols[p]);
                    lower.push(vals[p]);
                }
            }
            col_ptr.push(row_idx.len());
        }
        let sym = SymbolicSparseColMatRef::new_checked(nf, nf, &col_ptr, None, &row_idx);
        let llt = match SparseColMatRef::new(sym, &lower).sp_cholesky(Side::Lower) {
            Ok(f) => f,
            Err(LltError::Numeric(_)) => return Ok(None),
            Err(LltError::Generic(e)) => {
                return Err(Error::InvalidInput(format!("sparse factorisation failed: {e:?}")))
            }
        };
        let nk = sys.d.len();
        let mut slot = vec![usize::MAX; nk];
        for (_, k, v) in sys.b.triplets() {
            if v != 0.0 {
                slot[k] = 0;
            }
        }
        let mut coupled = Vec::new();
        for k in 0..nk {
            if slot[k] == 0 {
                slot[k] = coupled.len();
                coupled.push(k);
            } else if sys.d[k] == 0.0 {
                return Err(Error::SingularSystem { index: nf + k, dof_class: class(nf + k) });
            }
        }
        let m = coupled.len();
        let mut bm = Mat::<f64>::zeros(nf, m);
        for (i, k, v) in sys.b.triplets() {
            if slot[k] != usize::MAX {
                bm[(i, slot[k])] += v;
            }
        }
        let ainv_b = llt.solve(&bm);
        let mut s = Mat::<f64>::zeros(m, m);
        for (i, k, v) in sys.b.triplets() {
            if slot[k] != usize::MAX {
                let r = slot[k];
                for c in 0..m {
                    s[(r, c)] += v * ainv_b[(i, c)];
                }
            }
        }
        for (r, &k) in coupled.iter().enumerate() {
            s[(r, r)] -= sys.d[k];
        }
        Ok(Some(BlockFactor { llt, coupled, ainv_b, schur: s.partial_piv_lu() }))
    }

    fn solve(&self, sys: &SaddleSystem, rhs: &[f64]) -> Vec<f64> {
        let nf = sys.a.nrows();
        let (f, g) = rhs.split_at(nf);
        let y = self.llt.solve(&Mat::<f64>::from_fn(nf, 1, |i, _| f[i]));
        let mut x: Vec<f64> = (0..nf).map(|i| y[(i, 0)]).collect();
        let bty = sys.b.mul_vec_transpose(&x);
        let m = self.coupled.len();
        let srhs = Mat::<f64>::from_fn(m, 1, |r, _| bty[self.coupled[r]] - g[self.coupled[r]]);
        let lc = self.schur.solve(&srhs);
        for (i, xi) in x.iter_mut().enumerate() {
            for r in 0..m {
                *xi -= self.ainv_b[(i, r)] * lc[(r, 0)];
            }
        }
        let mut lam: Vec<f64> = g.iter().zip(&sys.d).map(|(gk, dk)| gk / dk).collect();
        for (r, &k) in self.coupled.iter().enumerate() {
            lam[k] = lc[(r, 0)];
        }
        x.extend(lam);
        x
    }
}

/// Solves a saddle system by block elimination, falling back to sparse LU
/// when the displacement block is indefinite.
fn saddle_solve(sys: &SaddleSystem, rhs: &[f64], class: impl Fn(usize) -> String) -> Result<Vec<f64>> {
    let n = sys.len();
    let bnorm = l2(rhs);
    if n == 0 || bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let Some(fac) = BlockFactor::new(sys, &class)? else {
        return linear_solve_classified(&sys.matrix(), rhs, class);
    };
    let mut x = fac.solve(sys, rhs);
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::SingularSystem { index: i, dof_class: class(i) });
    }
    let resid = |x: &[f64]| -> Vec<f64> { sys.apply(x).iter().zip(rhs).map(|(ax, b)| b - ax).collect() };
    let mut res = resid(&x);
    let mut rel = l2(&res) / bnorm;
    for _ in 0..3 {
        if rel < 1e-13 {
            break;
        }
        let dx = fac.solve(sys, &res);
        let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let cres = resid(&cand);
        let crel = l2(&cres) / bnorm;
        if !(crel < rel) {
            break;
        }
        x = cand;
        res = cres;
        rel = crel;
    }
    if !(rel < 1e-9) {
        return Err(Error::InaccurateSolve { residual: rel });
    }
    Ok(x)
}

impl ContactProblem<'_> {
    fn n_free(&self) -> usize {
        self.space.n_free()
    }

    /// Residual and tangent of the full system on a frozen active set.
    pub fn system(&self, state: &SystemState, k_lin: Option<&Csr>) -> Result<SaddleSystem> {
        let owned;
        let (fint, kel) = match (self.material.model, k_lin) {
            (Model::Linear, Some(k)) => (k.mul_vec(&state.u), k),
            (Model::Linear, None) => {
                owned = assemble_linear(self.space, &self.material, self.n_quad)?;
                (owned.mul_vec(&state.u), &owned)
            }
            (Model::NeoHookean, _) => {
                let (f, k) = assemble_neo_hookean(self.space, &self.material, self.n_quad, &state.u)?;
                owned = k;
                (f, &owned)
            }
        };
        let (rc, rl) = contact_residual(self.proj, &state.u, &state.lambda, &self.params, &state.active);
        let ct = contact_tangent(self.proj, &self.params, &state.active);
        let nf = self.n_free();
        let nk = self.proj.len();
        let dofs = self.space.dofs();
        let free = |k: usize| match dofs[k] {
            Dof::Free(i) => Some(i),
            Dof::Fixed(_) => None,
        };
        let mut residual = vec![0.0; nf + nk];
        for (k, &full) in self.space.free_to_full().iter().enumerate() {
            residual[k] = fint[full] - state.load_factor * self.f_ext[full] + rc[full];
        }
        residual[nf..].copy_from_slice(&rl);

        let mut a = Triplets::with_capacity(nf, nf, kel.nnz() + ct.uu.nnz());
        for m in [kel, &ct.uu] {
            for (i, j, v) in m.triplets() {
                if let (Some(p), Some(q)) = (free(i), free(j)) {
                    a.push(p, q, v);
                }
            }
        }
        let mut b = Triplets::with_capacity(nf, nk, ct.ul.nnz());
        for (i, k, v) in ct.ul.triplets() {
            if let Some(p) = free(i) {
                b.push(p, k, v);
            }
        }
        Ok(SaddleSystem { a: a.to_csr(), b: b.to_csr(), d: ct.ll, residual })
    }

    fn classify(&self, i: usize) -> String {
        let nf = self.n_free();
        if i < nf {
            let full = self.space.free_to_full()[i];
            let dim = self.space.dim();
            format!("displacement (node {}, component {})", full / dim, full % dim)
        } else {
            format!("multiplier {}", i - nf)
        }
    }

    fn apply_step(&self, state: &mut SystemState, dx: &[f64]) {
        let nf = self.n_free();
        for (k, &full) in self.space.free_to_full().iter().enumerate() {
            state.u[full] += dx[k];
        }
        for (l, d) in state.lambda.iter_mut().zip(&dx[nf..]) {
            *l += d;
        }
    }

    /// Tangent predictor for the load level `target`: the prescribed values
    /// move to their new level and the free unknowns follow the linearised
    /// response at the converged `state`, with its active set frozen.
    fn predict(&self, state: &SystemState, target: f64) -> Result<SystemState> {
        let dt = target - state.load_factor;
        let mut du = vec![0.0; self.space.n_dofs()];
        for (k, d) in self.space.dofs().iter().enumerate() {
            if let Dof::Fixed(v) = d {
                du[k] = v * dt;
            }
        }
        let sys = self.system(state, None)?;
        let kel = match self.material.model {
            Model::Linear => assemble_linear(self.space, &self.material, self.n_quad)?,
            Model::NeoHookean => assemble_neo_hookean(self.space, &self.material, self.n_quad, &state.u)?.1,
        };
        let ct = contact_tangent(self.proj, &self.params, &state.active);
        let w: Vec<f64> = kel.mul_vec(&du).iter().zip(ct.uu.mul_vec(&du)).map(|(a, b)| a + b).collect();
        let mut rhs: Vec<f64> =
            self.space.free_to_full().iter().map(|&full| dt * self.f_ext[full] - w[full]).collect();
        rhs.extend(ct.ul.mul_vec_transpose(&du).iter().map(|v| -v));
        let dx = saddle_solve(&sys, &rhs, |i| self.classify(i))?;
        let mut trial = state.clone();
        for (k, d) in du.iter().enumerate() {
            trial.u[k] += d;
        }
        self.apply_step(&mut trial, &dx);
        trial.load_factor = target;
        trial.active = update_active_set(&trial.lambda, &self.proj.projected_gap(&trial.u), &self.params);
        Ok(trial)
    }

    /// Newton iterations at a fixed load factor, starting from `state`.
    /// Returns the residual history.
    pub fn newton(&self, state: &mut SystemState, cfg: &NewtonConfig, k_lin: Option<&Csr>) -> Result<Vec<f64>> {
        let mut history = Vec::new();
        let mut r0 = None;
        for it in 0..=cfg.max_iter {
            let sys = self.system(state, k_lin)?;
            let rn = l2(&sys.residual);
            if !rn.is_finite() {
                return Err(self.fail(history, state));
            }
            history.push(rn);
            let r0v = *r0.get_or_insert(rn);
            let consistent =
                update_active_set(&state.lambda, &self.proj.projected_gap(&state.u), &self.params) == state.active;
            if consistent && (rn <= cfg.rtol * r0v || rn <= cfg.atol) {
                return Ok(history);
            }
            if it == cfg.max_iter {
                break;
            }
            let rhs: Vec<f64> = sys.residual.iter().map(|v| -v).collect();
            let dx = saddle_solve(&sys, &rhs, |i| self.classify(i))?;
            self.apply_step(state, &dx);
            state.active = update_active_set(&state.lambda, &self.proj.projected_gap(&state.u), &self.params);
        }
        Err(self.fail(history, state))
    }

    fn fail(&self, history: Vec<f64>, state: &SystemState) -> Error {
        let report = SolveReport {
            iterations: vec![history.len().saturating_sub(1)],
            residuals: vec![history],
            active_count: state.active.count(),
            ..Default::default()
        };
        Error::NonConvergence { report: Box::new(report) }
    }

    /// Initial state at load factor `t`: constrained values applied, free
    /// values zero, multipliers zero, geometric initial active set.
    pub fn initial_state(&self, t: f64) -> SystemState {
        SystemState {
            u: self.space.expand(&vec![0.0; self.n_free()], t),
            lambda: vec![0.0; self.proj.len()],
            active: self.proj.initial_active_set(),
            load_factor: t,
        }
    }
}

/// Small-deformation contact problem in one load step.
pub fn solve_linear_contact(problem: &ContactProblem, cfg: &NewtonConfig) -> Result<(SystemState, SolveReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let k = assemble_linear(problem.space, &problem.material, problem.n_quad)?;
    let mut state = problem.initial_state(1.0);
    let history = problem.newton(&mut state, cfg, Some(&k)).map_err(|e| with_time(e, start))?;
    let report = SolveReport {
        iterations: vec![history.len() - 1],
        residuals: vec![history],
        active_count: state.active.count(),
        step_cuts: 0,
        wall_time: start.elapsed(),
    };
    Ok((state, report))
}

/// Finite-deformation contact problem driven by the constrained values,
/// ramped over `cfg.load_steps` equal increments. A step that fails with a
/// non-physical state or without convergence is retried with a smaller
/// increment; after a success the increment grows back towards the nominal
/// one.
pub fn solve_nonlinear_contact(problem: &ContactProblem, cfg: &NewtonConfig) -> Result<(SystemState, SolveReport)> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = SolveReport::default();
    let mut state = problem.initial_state(0.0);
    let mut t = 0.0;
    let nominal = 1.0 / cfg.load_steps as f64;
    let mut dt = nominal;
    let mut cuts = 0;
    while t < 1.0 {
        let target = if t + dt > 1.0 - 1e-12 { 1.0 } else { t + dt };
        let attempt = problem.predict(&state, target).and_then(|mut trial| {
            let history = problem.newton(&mut trial, cfg, None)?;
            Ok((trial, history))
        });
        match attempt {
            Ok((trial, history)) => {
                report.iterations.push(history.len() - 1);
                report.residuals.push(history);
                state = trial;
                t = target;
                cuts = 0;
                dt = (dt / cfg.cut_factor).min(nominal);
            }
            Err(e @ (Error::NonPhysicalState { .. } | Error::NonConvergence { .. } | Error::InaccurateSolve { .. })) => {
                cuts += 1;
                report.step_cuts += 1;
                if cuts > cfg.max_cuts {
                    report.active_count = state.active.count();
                    report.wall_time = start.elapsed();
                    if let Error::NonConvergence { report: inner } = &e {
                        report.iterations.push(inner.total_iterations());
                        report.residuals.extend(inner.residuals.iter().cloned());
                    }
                    return Err(Error::NonConvergence { report: Box::new(report) });
                }
                dt *= cfg.cut_factor;
            }
            Err(e) => return Err(e),
        }
    }
    report.active_count = state.active.count();
    report.wall_time = start.elapsed();
    Ok((state, report))
}

fn with_time(e: Error, start: Instant) -> Error {
    match e {
        Error::NonConvergence { mut report } => {
            report.wall_time = start.elapsed();
            Error::NonConvergence { report }
        }
        other => other,
    }
}
