//! Volume terms: linear elasticity (plane strain in 2D), compressible
//! Neo-Hookean hyperelasticity, and pressure loads.
//!
//! All element loops run in parallel and are reduced in element order, so
//! assembled results do not depend on the thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::quadrature::{gauss_rule, QuadElement};
use crate::geometry::{det, inverse, Face};
use crate::sparse::{Csr, Triplets};
use crate::spaces::{face_rule, PrimalSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Linear,
    NeoHookean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub model: Model,
    pub young: f64,
    pub poisson: f64,
}

impl Material {
    pub fn new(model: Model, young: f64, poisson: f64) -> Result<Self> {
        if !(young > 0.0 && young.is_finite()) {
            return Err(Error::InvalidInput(format!("Young's modulus must be positive, got {young}")));
        }
        if !(0.0..0.5).contains(&poisson) {
            return Err(Error::InvalidInput(format!("Poisson ratio must lie in [0, 0.5), got {poisson}")));
        }
        Ok(Material { model, young, poisson })
    }

    pub fn linear(young: f64, poisson: f64) -> Result<Self> {
        Self::new(Model::Linear, young, poisson)
    }

    pub fn neo_hookean(young: f64, poisson: f64) -> Result<Self> {
        Self::new(Model::NeoHookean, young, poisson)
    }

    /// Lamé constants `(lambda, mu)`.
    pub fn lame(&self) -> (f64, f64) {
        let (e, nu) = (self.young, self.poisson);
        (e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), e / (2.0 * (1.0 + nu)))
    }
}

/// Quadrature data of one element, with functions merged per node.
pub(crate) struct ElementData {
    /// Global node of each local node.
    pub nodes: Vec<usize>,
    pub points: Vec<PointData>,
}

pub(crate) struct PointData {
    /// Local node of each nonzero basis function.
    pub local: Vec<usize>,
    pub grads: Vec<[f64; 3]>,
    /// Quadrature weight times Jacobian determinant.
    pub dv: f64,
    pub xi: Vec<f64>,
}

pub(crate) fn element_data(space: &PrimalSpace, e: &QuadElement) -> Result<ElementData> {
    let patch = space.patch();
    let mut nodes: Vec<usize> = Vec::new();
    let mut points = Vec::with_capacity(e.weights.len());
    for (xi, w) in e.points.iter().zip(&e.weights) {
        let pe = patch.eval_map(xi)?;
        let local = pe
            .funcs
            .iter()
            .map(|&cp| {
                let n = space.node_of(cp);
                match nodes.iter().position(|&m| m == n) {
                    Some(i) => i,
                    None => {
                        nodes.push(n);
                        nodes.len() - 1
                    }
                }
            })
            .collect();
        points.push(PointData { local, grads: pe.grads, dv: w * pe.det, xi: xi.clone() });
    }
    Ok(ElementData { nodes, points })
}

/// Runs `f` on every element in parallel, returning results in element order.
pub(crate) fn map_elements<T: Send>(
    space: &PrimalSpace,
    n_quad: usize,
    f: impl Fn(&ElementData) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let rule = gauss_rule(&space.patch().breakpoints(), n_quad);
    rule.elements
        .par_iter()
        .map(|e| element_data(space, e).and_then(|d| f(&d)))
        .collect()
}

/// Default Gauss points per direction: `p + 1`.
pub fn default_quadrature(space: &PrimalSpace) -> usize {
    (0..space.dim()).map(|d| space.patch().degree(d)).max().unwrap_or(1) + 1
}

type LocalBlock = (Vec<usize>, Vec<f64>, Vec<f64>);

fn scatter(space: &PrimalSpace, blocks: Vec<LocalBlock>) -> (Csr, Vec<f64>) {
    let n = space.n_dofs();
    let cap = blocks.iter().map(|b| b.1.len()).sum();
    let mut t = Triplets::with_capacity(n, n, cap);
    let mut rhs = vec![0.0; n];
    for (dofs, mat, vec) in blocks {
        let m = dofs.len();
        for (a, &ga) in dofs.iter().enumerate() {
            rhs[ga] += vec[a];
            for (b, &gb) in dofs.iter().enumerate() {
                let v = mat[a * m + b];
                if v != 0.0 {
                    t.push(ga, gb, v);
                }
            }
        }
    }
    (t.to_csr(), rhs)
}

fn local_dofs(nodes: &[usize], dim: usize) -> Vec<usize> {
    nodes.iter().flat_map(|&n| (0..dim).map(move |c| n * dim + c)).collect()
}

/// Small-strain stiffness over all (unconstrained and constrained) DOFs.
pub fn assemble_linear(space: &PrimalSpace, material: &Material, n_quad: usize) -> Result<Csr> {
    let dim = space.dim();
    let (lam, mu) = material.lame();
    let blocks = map_elements(space, n_quad, |el| {
        let m = el.nodes.len() * dim;
        let mut k = vec![0.0; m * m];
        for pt in &el.points {
            for (a, &la) in pt.local.iter().enumerate() {
                let ga = pt.grads[a];
                for (b, &lb) in pt.local.iter().enumerate() {
                    let gb = pt.grads[b];
                    let gg: f64 = (0..dim).map(|q| ga[q] * gb[q]).sum();
                    for i in 0..dim {
                        let row = (la * dim + i) * m + lb * dim;
                        for j in 0..dim {
                            let mut v = lam * ga[i] * gb[j] + mu * ga[j] * gb[i];
                            if i == j {
                                v += mu * gg;
                            }
                            k[row + j] += v * pt.dv;
                        }
                    }
                }
            }
        }
        Ok((local_dofs(&el.nodes, dim), k, vec![0.0; m]))
    })?;
    Ok(scatter(space, blocks).0)
}

/// Load vector of a uniform pressure `p` pushing into the body on `face`.
pub fn assemble_neumann_pressure(space: &PrimalSpace, face: Face, p: f64, n_quad: usize) -> Result<Vec<f64>> {
    let patch = space.patch();
    let dim = space.dim();
    let rule = face_rule(patch, face, n_quad)?;
    let mut f = vec![0.0; space.n_dofs()];
    if p == 0.0 {
        return Ok(f);
    }
    for e in &rule.elements {
        for (t, w) in e.points.iter().zip(&e.weights) {
            let fr = patch.boundary_frame(face, t)?;
            for (node, v) in space.merge_by_node(&fr.eval.funcs, &fr.eval.values) {
                for i in 0..dim {
                    f[node * dim + i] -= p * fr.normal[i] * v * w * fr.measure;
                }
            }
        }
    }
    Ok(f)
}

/// Deformation gradient `F = I + grad u` at a point.
fn deformation_gradient(pt: &PointData, nodes: &[usize], u: &[f64], dim: usize) -> [[f64; 3]; 3] {
    let mut f = [[0.0; 3]; 3];
    for (i, row) in f.iter_mut().enumerate().take(dim) {
        row[i] = 1.0;
    }
    for (a, &la) in pt.local.iter().enumerate() {
        let base = nodes[la] * dim;
        for i in 0..dim {
            for j in 0..dim {
                f[i][j] += u[base + i] * pt.grads[a][j];
            }
        }
    }
    f
}

/// First Piola stress and `F^{-1}` for the Neo-Hookean law.
fn neo_hookean_piola(f: &[[f64; 3]; 3], dim: usize, lam: f64, mu: f64, xi: &[f64]) -> Result<([[f64; 3]; 3], [[f64; 3]; 3], f64)> {
    let j = det(f, dim);
    if !(j > 0.0) {
        return Err(Error::NonPhysicalState { xi: xi.to_vec(), det_f: j });
    }
    let finv = inverse(f, dim, j);
    let lnj = j.ln();
    let mut p = [[0.0; 3]; 3];
    for i in 0..dim {
        for k in 0..dim {
            // F^{-T}_{ik} = F^{-1}_{ki}
            p[i][k] = mu * (f[i][k] - finv[k][i]) + lam * lnj * finv[k][i];
        }
    }
    Ok((p, finv, lnj))
}

/// Internal force vector and consistent tangent of the Neo-Hookean model
/// at full displacement coefficients `u`.
pub fn assemble_neo_hookean(space: &PrimalSpace, material: &Material, n_quad: usize, u: &[f64]) -> Result<(Vec<f64>, Csr)> {
    let dim = space.dim();
    let (lam, mu) = material.lame();
    let blocks = map_elements(space, n_quad, |el| {
        let m = el.nodes.len() * dim;
        let mut k = vec![0.0; m * m];
        let mut r = vec![0.0; m];
        for pt in &el.points {
            let f = deformation_gradient(pt, &el.nodes, u, dim);
            let (p, fi, lnj) = neo_hookean_piola(&f, dim, lam, mu, &pt.xi)?;
            let c1 = mu - lam * lnj;
            for (a, &la) in pt.local.iter().enumerate() {
                let ga = pt.grads[a];
                for i in 0..dim {
                    r[la * dim + i] += (0..dim).map(|jj| p[i][jj] * ga[jj]).sum::<f64>() * pt.dv;
                }
                // (grad N_a)^T F^{-1} pieces
                let mut ga_fi = [0.0; 3]; // sum_J ga_J F^{-1}_{Jk}
                for kk in 0..dim {
                    ga_fi[kk] = (0..dim).map(|jj| ga[jj] * fi[jj][kk]).sum();
                }
                for (b, &lb) in pt.local.iter().enumerate() {
                    let gb = pt.grads[b];
                    let gg: f64 = (0..dim).map(|q| ga[q] * gb[q]).sum();
                    let mut gb_fi = [0.0; 3]; // sum_L gb_L F^{-1}_{Li}
                    for ii in 0..dim {
                        gb_fi[ii] = (0..dim).map(|l| gb[l] * fi[l][ii]).sum();
                    }
                    for i in 0..dim {
                        let row = (la * dim + i) * m + lb * dim;
                        for kk in 0..dim {
                            let mut v = c1 * gb_fi[i] * ga_fi[kk] + lam * ga_fi[i] * gb_fi[kk];
                            if i == kk {
                                v += mu * gg;
                            }
                            k[row + kk] += v * pt.dv;
                        }
                    }
                }
            }
        }
        Ok((local_dofs(&el.nodes, dim), k, r))
    })?;
    let (tangent, residual) = scatter(space, blocks);
    Ok((residual, tangent))
}

/// Stored energy of the Neo-Hookean model.
pub fn neo_hookean_energy(space: &PrimalSpace, material: &Material, n_quad: usize, u: &[f64]) -> Result<f64> {
    let dim = space.dim();
    let (lam, mu) = material.lame();
    let parts = map_elements(space, n_quad, |el| {
        let mut w = 0.0;
        for pt in &el.points {
            let f = deformation_gradient(pt, &el.nodes, u, dim);
            let j = det(&f, dim);
            if !(j > 0.0) {
                return Err(Error::NonPhysicalState { xi: pt.xi.clone(), det_f: j });
            }
            let trc: f64 = (0..dim).flat_map(|i| (0..dim).map(move |k| (i, k))).map(|(i, k)| f[i][k] * f[i][k]).sum();
            let lnj = j.ln();
            w += (0.5 * mu * (trc - dim as f64) - mu * lnj + 0.5 * lam * lnj * lnj) * pt.dv;
        }
        Ok(w)
    })?;
    Ok(parts.iter().sum())
}

/// Stress at a parametric point: Cauchy stress for both models (equal to
/// the Hooke stress for the linear model). In 2D only the in-plane block
/// is filled.
pub fn eval_stress(space: &PrimalSpace, material: &Material, u: &[f64], xi: &[f64]) -> Result<[[f64; 3]; 3]> {
    let dim = space.dim();
    let (lam, mu) = material.lame();
    let (_, g) = space.eval_field(u, xi)?;
    let mut s = [[0.0; 3]; 3];
    match material.model {
        Model::Linear => {
            let tr: f64 = (0..dim).map(|i| g[i][i]).sum();
            for i in 0..dim {
                for j in 0..dim {
                    s[i][j] = mu * (g[i][j] + g[j][i]);
                }
                s[i][i] += lam * tr;
            }
        }
        Model::NeoHookean => {
            let mut f = g;
            for (i, row) in f.iter_mut().enumerate().take(dim) {
                row[i] += 1.0;
            }
            let j = det(&f, dim);
            if !(j > 0.0) {
                return Err(Error::NonPhysicalState { xi: xi.to_vec(), det_f: j });
            }
            for i in 0..dim {
                for k in 0..dim {
                    let b: f64 = (0..dim).map(|q| f[i][q] * f[k][q]).sum();
                    s[i][k] = mu / j * (b - if i == k { 1.0 } else { 0.0 });
                }
                s[i][i] += lam * j.ln() / j;
            }
        }
    }
    Ok(s)
}
