//! Augmented Lagrangian contact against a rigid plane.
//!
//! For each multiplier function `B_K` on the contact face the projection
//! data stores
//!
//! - `m_K = int B_K dGamma`,
//! - the normal coupling row `C_K[A] = int B_K N_A n dGamma`,
//! - the initial gap moment `g0_K = int B_K (n . X - offset) dGamma`,
//!
//! so that the projected gap is `G_K(u) = (g0_K + C_K . u) / m_K` and the
//! active-set indicator is `c_K = lambda_K + r G_K`.
//!
//! The multiplier equations are used in the lumped, symmetric form
//! `m_K G_K` (active) and `-m_K lambda_K / r` (inactive). This is the
//! gradient of the lumped energy
//! `sum_K m_K / (2 r) ([c_K]_-^2 - lambda_K^2)`, and it differs from the
//! mass-weighted Galerkin rows only by the invertible factor `M D^{-1}`
//! (see [`ProjectionData::weighted_multiplier_residual`]), so both have the
//! same roots. For piecewise-constant multipliers the two coincide.
//!
//! The plane is flat, so the gap is affine in the current position and the
//! same expressions hold on the reference face for finite deformations.

use crate::error::{Error, Result};
use crate::geometry::{dot, norm};
use crate::sparse::{Csr, Triplets};
use crate::spaces::{face_rule, DualSpace, PrimalSpace};

/// Tolerance under which an initial gap counts as contact.
pub const INITIAL_CONTACT_GAP: f64 = 1e-9;

/// `min(0, z)`.
pub fn neg_part(z: f64) -> f64 {
    z.min(0.0)
}

/// Rigid half-space `{x : n . x <= offset}` with `n` pointing toward the body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPlane {
    normal: [f64; 3],
    offset: f64,
}

impl RigidPlane {
    pub fn new(normal: [f64; 3], offset: f64) -> Result<Self> {
        let len = norm(&normal);
        if !((len - 1.0).abs() < 1e-12) {
            return Err(Error::InvalidInput(format!("plane normal must have unit length, got {len}")));
        }
        Ok(RigidPlane { normal, offset })
    }

    pub fn normal(&self) -> [f64; 3] {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Signed distance of `x` above the plane.
    pub fn gap(&self, x: &[f64; 3]) -> f64 {
        dot(&self.normal, x) - self.offset
    }
}

/// Augmentation parameter `r = r0 / h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentedParams {
    pub r0: f64,
    pub h: f64,
    pub r: f64,
}

impl AugmentedParams {
    pub fn new(r0: f64, h: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::InvalidInput(format!("r0 must be positive, got {r0}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("mesh size must be positive, got {h}")));
        }
        Ok(AugmentedParams { r0, h, r: r0 / h })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSet(Vec<bool>);

impl ActiveSet {
    pub fn new(flags: Vec<bool>) -> Self {
        ActiveSet(flags)
    }

    pub fn all(n: usize, active: bool) -> Self {
        ActiveSet(vec![active; n])
    }

    pub fn is_active(&self, k: usize) -> bool {
        self.0[k]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&a| a).count()
    }

    pub fn flags(&self) -> &[bool] {
        &self.0
    }
}

/// Contact-face integrals tying the displacement and multiplier spaces.
#[derive(Debug, Clone)]
pub struct ProjectionData {
    measures: Vec<f64>,
    coupling: Vec<Vec<(usize, f64)>>,
    gap0: Vec<f64>,
    support_min_gap: Vec<f64>,
    mass: Csr,
    n_dofs: usize,
    plane: RigidPlane,
}

/// Integrates the projection data with `n_quad` Gauss points per face
/// direction.
pub fn build_projection(space: &PrimalSpace, dual: &DualSpace, plane: &RigidPlane, n_quad: usize) -> Result<ProjectionData> {
    let patch = space.patch();
    let face = dual.face();
    let dim = space.dim();
    let nk = dual.len();
    let n = plane.normal();
    let rule = face_rule(patch, face, n_quad)?;
    let mut measures = vec![0.0; nk];
    let mut gap0 = vec![0.0; nk];
    let mut support_min_gap = vec![f64::INFINITY; nk];
    let mut coupling: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nk];
    let mut mass = Triplets::new(nk, nk);
    for e in &rule.elements {
        let mut elem_gap = f64::INFINITY;
        let corners = corner_points(&e.bounds);
        for c in &corners {
            elem_gap = elem_gap.min(plane.gap(&patch.point(&patch.face_point(face, c))?));
        }
        let mut touched: Vec<usize> = Vec::new();
        for (t, w) in e.points.iter().zip(&e.weights) {
            let fr = patch.boundary_frame(face, t)?;
            let g = plane.gap(&fr.x);
            elem_gap = elem_gap.min(g);
            let dg = w * fr.measure;
            let b = dual.eval(t)?;
            let nodes = space.merge_by_node(&fr.eval.funcs, &fr.eval.values);
            for &(k, bk) in &b {
                if bk == 0.0 {
                    continue;
                }
                if !touched.contains(&k) {
                    touched.push(k);
                }
                measures[k] += bk * dg;
                gap0[k] += bk * g * dg;
                for &(node, na) in &nodes {
                    for c in 0..dim {
                        if n[c] != 0.0 {
                            coupling[k].push((node * dim + c, bk * na * n[c] * dg));
                        }
                    }
                }
                for &(kk, bkk) in &b {
                    mass.push(k, kk, bk * bkk * dg);
                }
            }
        }
        for k in touched {
            support_min_gap[k] = support_min_gap[k].min(elem_gap);
        }
    }
    // merge repeated DOFs, keeping first-occurrence order
    for row in coupling.iter_mut() {
        let mut merged: Vec<(usize, f64)> = Vec::new();
        let mut order: Vec<(usize, usize)> = row.iter().enumerate().map(|(i, (d, _))| (*d, i)).collect();
        order.sort();
        for (d, i) in order {
            match merged.last_mut() {
                Some(last) if last.0 == d => last.1 += row[i].1,
                _ => merged.push((d, row[i].1)),
            }
        }
        *row = merged;
    }
    Ok(ProjectionData {
        measures,
        coupling,
        gap0,
        support_min_gap,
        mass: mass.to_csr(),
        n_dofs: space.n_dofs(),
        plane: *plane,
    })
}

fn corner_points(bounds: &[(f64, f64)]) -> Vec<Vec<f64>> {
    let d = bounds.len();
    (0..1usize << d)
        .map(|mask| (0..d).map(|i| if mask >> i & 1 == 1 { bounds[i].1 } else { bounds[i].0 }).collect())
        .collect()
}

impl ProjectionData {
    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn plane(&self) -> &RigidPlane {
        &self.plane
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    /// Sparse row `C_K` over full displacement DOFs.
    pub fn coupling(&self, k: usize) -> &[(usize, f64)] {
        &self.coupling[k]
    }

    /// Dual mass matrix `int B_K B_L dGamma`.
    pub fn mass(&self) -> &Csr {
        &self.mass
    }

    /// Smallest initial gap over the support of each `B_K`.
    pub fn support_min_gap(&self) -> &[f64] {
        &self.support_min_gap
    }

    /// `(Pi g_n)_K` for full displacement coefficients `u`.
    pub fn projected_gap(&self, u: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|k| (self.gap0[k] + self.coupling[k].iter().map(|(d, c)| c * u[*d]).sum::<f64>()) / self.measures[k])
            .collect()
    }

    /// Multipliers whose support touches the plane in the reference state.
    pub fn initial_active_set(&self) -> ActiveSet {
        ActiveSet(self.support_min_gap.iter().map(|&g| g <= INITIAL_CONTACT_GAP).collect())
    }

    /// Multiplier-side residual in the mass-weighted Galerkin form
    /// `-(1/r) sum_K M_{LK} (lambda_K - [c_K]_-)`.
    pub fn weighted_multiplier_residual(&self, u: &[f64], lambda: &[f64], params: &AugmentedParams) -> Vec<f64> {
        let g = self.projected_gap(u);
        let d: Vec<f64> = (0..self.len()).map(|k| lambda[k] - neg_part(lambda[k] + params.r * g[k])).collect();
        self.mass.mul_vec(&d).iter().map(|v| -v / params.r).collect()
    }
}

/// `(Pi v)_K = int v B_K / int B_K` for a field given at physical points.
pub fn project(space: &PrimalSpace, dual: &DualSpace, v: impl Fn(&[f64; 3]) -> f64, n_quad: usize) -> Result<Vec<f64>> {
    let patch = space.patch();
    let rule = face_rule(patch, dual.face(), n_quad)?;
    let mut num = vec![0.0; dual.len()];
    for e in &rule.elements {
        for (t, w) in e.points.iter().zip(&e.weights) {
            let fr = patch.boundary_frame(dual.face(), t)?;
            let val = v(&fr.x);
            for (k, b) in dual.eval(t)? {
                num[k] += val * b * w * fr.measure;
            }
        }
    }
    Ok(num.iter().zip(dual.measures()).map(|(a, m)| a / m).collect())
}

/// `K` is active iff `lambda_K + r (Pi g)_K < 0`; ties are inactive.
pub fn update_active_set(lambda: &[f64], projected_gap: &[f64], params: &AugmentedParams) -> ActiveSet {
    ActiveSet(lambda.iter().zip(projected_gap).map(|(l, g)| l + params.r * g < 0.0).collect())
}

/// Contact contributions to the residual: `(R_u, R_lambda)`, with `R_u`
/// over all displacement DOFs.
pub fn contact_residual(
    proj: &ProjectionData,
    u: &[f64],
    lambda: &[f64],
    params: &AugmentedParams,
    active: &ActiveSet,
) -> (Vec<f64>, Vec<f64>) {
    let g = proj.projected_gap(u);
    let mut ru = vec![0.0; proj.n_dofs];
    let mut rl = vec![0.0; proj.len()];
    for k in 0..proj.len() {
        let m = proj.measures[k];
        if active.is_active(k) {
            let c = lambda[k] + params.r * g[k];
            for &(d, v) in &proj.coupling[k] {
                ru[d] += c * v;
            }
            rl[k] = m * g[k];
        } else {
            rl[k] = -m * lambda[k] / params.r;
        }
    }
    (ru, rl)
}

/// Derivative of [`contact_residual`] at a frozen active set.
#[derive(Debug, Clone)]
pub struct ContactTangent {
    /// Displacement block over full DOFs.
    pub uu: Csr,
    /// `d R_u / d lambda` (displacement rows, multiplier columns).
    pub ul: Csr,
    /// Diagonal of the multiplier block.
    pub ll: Vec<f64>,
}

pub fn contact_tangent(proj: &ProjectionData, params: &AugmentedParams, active: &ActiveSet) -> ContactTangent {
    let n = proj.n_dofs;
    let nk = proj.len();
    let mut uu = Triplets::new(n, n);
    let mut ul = Triplets::new(n, nk);
    let mut ll = vec![0.0; nk];
    for k in 0..nk {
        if active.is_active(k) {
            let s = params.r / proj.measures[k];
            let row = &proj.coupling[k];
            for &(a, va) in row {
                ul.push(a, k, va);
                for &(b, vb) in row {
                    uu.push(a, b, s * va * vb);
                }
            }
        } else {
            ll[k] = -proj.measures[k] / params.r;
        }
    }
    ContactTangent { uu: uu.to_csr(), ul: ul.to_csr(), ll }
}

/// Lumped augmented contact energy `sum_K m_K/(2r) ([c_K]_-^2 - lambda_K^2)`.
pub fn contact_energy(proj: &ProjectionData, u: &[f64], lambda: &[f64], params: &AugmentedParams) -> f64 {
    let g = proj.projected_gap(u);
    (0..proj.len())
        .map(|k| {
            let c = neg_part(lambda[k] + params.r * g[k]);
            proj.measures[k] / (2.0 * params.r) * (c * c - lambda[k] * lambda[k])
        })
        .sum()
}
