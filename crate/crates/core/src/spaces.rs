//! Discrete displacement and multiplier spaces.
//!
//! Displacements use the geometry's NURBS basis for every component
//! (isoparametric). Control points that coincide physically, as happens on
//! the collapsed faces of the polar benchmark shapes, share one node so the
//! field stays single-valued there. Dirichlet conditions are imposed by
//! eliminating the constrained components of the face-adjacent nodes.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::quadrature::{gauss_rule, QuadratureRule};
use crate::geometry::{Face, NurbsPatch};
use crate::splines::{KnotVector, TensorBasis};

/// Strongly imposed condition `u_c = value` for each listed component on a face.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletBc {
    pub face: Face,
    pub components: Vec<usize>,
    pub value: f64,
}

impl DirichletBc {
    pub fn clamped(face: Face, dim: usize) -> Self {
        DirichletBc { face, components: (0..dim).collect(), value: 0.0 }
    }

    /// Symmetry plane: only the normal component vanishes.
    pub fn symmetry(face: Face, normal_component: usize) -> Self {
        DirichletBc { face, components: vec![normal_component], value: 0.0 }
    }

    pub fn prescribed(face: Face, component: usize, value: f64) -> Self {
        DirichletBc { face, components: vec![component], value }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dof {
    Free(usize),
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct PrimalSpace {
    patch: NurbsPatch,
    node_of: Vec<usize>,
    n_nodes: usize,
    dofs: Vec<Dof>,
    free_to_full: Vec<usize>,
    warnings: Vec<String>,
}

/// Builds the vector displacement space with the given constraints.
pub fn build_primal(patch: &NurbsPatch, dirichlet: &[DirichletBc]) -> Result<PrimalSpace> {
    let dim = patch.dim();
    for kv in patch.basis().knot_vectors() {
        if !kv.is_smooth() {
            return Err(Error::InvalidKnotVector(format!(
                "interior multiplicity must not exceed p - 1 = {}",
                kv.degree().saturating_sub(1)
            )));
        }
    }
    let (node_of, n_nodes) = merge_coincident(patch.points());
    let mut fixed: Vec<Option<f64>> = vec![None; n_nodes * dim];
    for bc in dirichlet {
        let layer = patch.face_layer(bc.face)?;
        if let Some(&c) = bc.components.iter().find(|&&c| c >= dim) {
            return Err(Error::InvalidInput(format!("component {c} out of range for dimension {dim}")));
        }
        for &cp in &layer {
            for &c in &bc.components {
                let k = node_of[cp] * dim + c;
                match fixed[k] {
                    Some(v) if v != bc.value => {
                        return Err(Error::InvalidInput(format!(
                            "conflicting Dirichlet values {v} and {} on component {c}",
                            bc.value
                        )));
                    }
                    _ => fixed[k] = Some(bc.value),
                }
            }
        }
    }
    let mut warnings = Vec::new();
    if dirichlet.iter().all(|bc| bc.components.is_empty()) {
        warnings.push("no Dirichlet condition: the elastic problem is only determined through contact".into());
    }
    let mut dofs = Vec::with_capacity(fixed.len());
    let mut free_to_full = Vec::new();
    for (k, f) in fixed.iter().enumerate() {
        match f {
            Some(v) => dofs.push(Dof::Fixed(*v)),
            None => {
                dofs.push(Dof::Free(free_to_full.len()));
                free_to_full.push(k);
            }
        }
    }
    Ok(PrimalSpace { patch: patch.clone(), node_of, n_nodes, dofs, free_to_full, warnings })
}

/// Union of control points closer than a relative tolerance.
fn merge_coincident(points: &[[f64; 3]]) -> (Vec<usize>, usize) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for d in 0..3 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let size = (0..3).map(|d| hi[d] - lo[d]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = 1e-10 * size;
    let key = |p: &[f64; 3]| -> [i64; 3] { [0, 1, 2].map(|d| ((p[d] - lo[d]) / tol).floor() as i64) };

    let mut parent: Vec<usize> = (0..points.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        let k = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(cands) = grid.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        for &j in cands {
                            let q = &points[j];
                            let d2: f64 = (0..3).map(|d| (p[d] - q[d]).powi(2)).sum();
                            if d2.sqrt() <= tol {
                                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                                parent[a.max(b)] = a.min(b);
                            }
                        }
                    }
                }
            }
        }
        grid.entry(k).or_default().push(i);
    }
    // number nodes by first control point, increasing
    let mut node_of = vec![usize::MAX; points.len()];
    let mut root_node: HashMap<usize, usize> = HashMap::new();
    let mut n = 0;
    for i in 0..points.len() {
        let r = find(&mut parent, i);
        let id = *root_node.entry(r).or_insert_with(|| {
            n += 1;
            n - 1
        });
        node_of[i] = id;
    }
    (node_of, n)
}

impl PrimalSpace {
    pub fn patch(&self) -> &NurbsPatch {
        &self.patch
    }

    pub fn dim(&self) -> usize {
        self.patch.dim()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_dofs(&self) -> usize {
        self.n_nodes * self.dim()
    }

    pub fn n_free(&self) -> usize {
        self.free_to_full.len()
    }

    pub fn node_of(&self, cp: usize) -> usize {
        self.node_of[cp]
    }

    pub fn dof_index(&self, cp: usize, comp: usize) -> usize {
        self.node_of[cp] * self.dim() + comp
    }

    pub fn dof(&self, k: usize) -> Dof {
        self.dofs[k]
    }

    pub fn dofs(&self) -> &[Dof] {
        &self.dofs
    }

    pub fn free_to_full(&self) -> &[usize] {
        &self.free_to_full
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn is_constrained(&self, k: usize) -> bool {
        matches!(self.dofs[k], Dof::Fixed(_))
    }

    /// Full coefficient vector from free values, constrained entries scaled
    /// by `load_factor`.
    pub fn expand(&self, free: &[f64], load_factor: f64) -> Vec<f64> {
        self.dofs
            .iter()
            .map(|d| match *d {
                Dof::Free(i) => free[i],
                Dof::Fixed(v) => v * load_factor,
            })
            .collect()
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free_to_full.iter().map(|&k| full[k]).collect()
    }

    /// Value and gradient `grad[i][j] = du_i/dx_j` of the displacement at a
    /// parametric point.
    pub fn eval_field(&self, u: &[f64], xi: &[f64]) -> Result<([f64; 3], [[f64; 3]; 3])> {
        let e = self.patch.eval_map(xi)?;
        let dim = self.dim();
        let mut val = [0.0; 3];
        let mut grad = [[0.0; 3]; 3];
        for (a, &cp) in e.funcs.iter().enumerate() {
            let base = self.node_of[cp] * dim;
            for i in 0..dim {
                let c = u[base + i];
                val[i] += e.values[a] * c;
                for j in 0..dim {
                    grad[i][j] += e.grads[a][j] * c;
                }
            }
        }
        Ok((val, grad))
    }

    /// Displacement value only; valid on the boundary as well.
    pub fn eval_value(&self, u: &[f64], xi: &[f64]) -> Result<[f64; 3]> {
        let e = self.patch.eval_param(xi)?;
        let dim = self.dim();
        let mut val = [0.0; 3];
        for (a, &cp) in e.funcs.iter().enumerate() {
            let base = self.node_of[cp] * dim;
            for i in 0..dim {
                val[i] += e.values[a] * u[base + i];
            }
        }
        Ok(val)
    }

    /// Normal trace `v . n` on a face for a fixed direction `n`.
    pub fn trace_normal(&self, face: Face, n: [f64; 3]) -> Result<NormalTrace<'_>> {
        self.patch.check_face(face)?;
        Ok(NormalTrace { space: self, face, n })
    }

    /// Sums values of functions sharing a node: `(node, value)` pairs.
    pub fn merge_by_node(&self, funcs: &[usize], values: &[f64]) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(funcs.len());
        for (&cp, &v) in funcs.iter().zip(values) {
            let node = self.node_of[cp];
            match out.iter_mut().find(|(n, _)| *n == node) {
                Some(e) => e.1 += v,
                None => out.push((node, v)),
            }
        }
        out
    }
}

/// Evaluator of `v(x) . n` on a face from volume coefficients.
pub struct NormalTrace<'a> {
    space: &'a PrimalSpace,
    face: Face,
    n: [f64; 3],
}

impl NormalTrace<'_> {
    /// Sparse row `(dof, coefficient)` with `v_n(t) = sum coef * v[dof]`.
    pub fn row(&self, t: &[f64]) -> Result<Vec<(usize, f64)>> {
        let patch = self.space.patch();
        let e = patch.eval_param(&patch.face_point(self.face, t))?;
        let dim = self.space.dim();
        let mut out = Vec::new();
        for (node, v) in self.space.merge_by_node(&e.funcs, &e.values) {
            for c in 0..dim {
                if self.n[c] != 0.0 {
                    out.push((node * dim + c, v * self.n[c]));
                }
            }
        }
        Ok(out)
    }

    pub fn eval(&self, v: &[f64], t: &[f64]) -> Result<f64> {
        Ok(self.row(t)?.iter().map(|(k, c)| c * v[*k]).sum())
    }
}

/// Quadrature over the elements of a face (face-parametric coordinates).
pub fn face_rule(patch: &NurbsPatch, face: Face, n: usize) -> Result<QuadratureRule> {
    patch.check_face(face)?;
    let bps = patch.breakpoints();
    let tb: Vec<Vec<f64>> = face.tangent_dirs(patch.dim()).iter().map(|&d| bps[d].clone()).collect();
    Ok(gauss_rule(&tb, n))
}

/// Multiplier space of degree `p - 2` on the contact face.
#[derive(Debug, Clone)]
pub struct DualSpace {
    face: Face,
    basis: TensorBasis,
    measures: Vec<f64>,
}

pub fn build_dual(patch: &NurbsPatch, face: Face) -> Result<DualSpace> {
    patch.check_face(face)?;
    let kvs: Vec<KnotVector> =
        patch.face_knots(face).iter().map(KnotVector::trim_for_dual).collect::<Result<_>>()?;
    let basis = TensorBasis::new(kvs)?;
    let p = patch.degree(face.tangent_dirs(patch.dim())[0]);
    let rule = face_rule(patch, face, p + 1)?;
    let mut measures = vec![0.0; basis.len()];
    for e in &rule.elements {
        for (t, w) in e.points.iter().zip(&e.weights) {
            let fr = patch.boundary_frame(face, t)?;
            for (k, b) in basis.eval_values(t)? {
                measures[k] += w * fr.measure * b;
            }
        }
    }
    if let Some((k, m)) = measures.iter().enumerate().find(|(_, m)| !(**m > 0.0)) {
        return Err(Error::DegenerateGeometry { xi: vec![k as f64], det: *m });
    }
    Ok(DualSpace { face, basis, measures })
}

impl DualSpace {
    pub fn face(&self) -> Face {
        self.face
    }

    pub fn basis(&self) -> &TensorBasis {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// `int_{Gamma_C} B_K dGamma`.
    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn eval(&self, t: &[f64]) -> Result<Vec<(usize, f64)>> {
        self.basis.eval_values(t)
    }

    /// Face-parametric Greville point of each multiplier function.
    pub fn greville(&self) -> Vec<Vec<f64>> {
        let g: Vec<Vec<f64>> = self.basis.knot_vectors().iter().map(KnotVector::greville).collect();
        (0..self.len()).map(|k| self.basis.multi(k).iter().enumerate().map(|(d, &i)| g[d][i]).collect()).collect()
    }
}
