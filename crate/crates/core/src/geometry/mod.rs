//! Tensor-product NURBS geometry maps.

pub mod quadrature;
pub mod shapes;

pub use quadrature::{gauss_legendre, gauss_rule, QuadElement, QuadratureRule};
pub use shapes::{graded_knots, make_octant_sphere, make_quarter_disc, RefinedEnd};

use crate::error::{Error, Result};
use crate::splines::{advance, bezier_elevation_matrix, KnotVector, TensorBasis};

/// Which end of a parametric direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Low,
    High,
}

impl Side {
    pub fn value(self) -> f64 {
        match self {
            Side::Low => 0.0,
            Side::High => 1.0,
        }
    }
}

/// Boundary face `{xi_dir = 0 or 1}` of a patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Face {
    pub dir: usize,
    pub side: Side,
}

impl Face {
    pub const fn new(dir: usize, side: Side) -> Self {
        Face { dir, side }
    }

    /// Parametric directions running along the face.
    pub fn tangent_dirs(&self, dim: usize) -> Vec<usize> {
        (0..dim).filter(|&d| d != self.dir).collect()
    }
}

/// Parametric evaluation: rational basis values and `d/dxi` derivatives,
/// position and Jacobian `jac[i][j] = dx_i / dxi_j`.
#[derive(Debug, Clone)]
pub struct ParamEval {
    pub funcs: Vec<usize>,
    pub values: Vec<f64>,
    pub dxi: Vec<[f64; 3]>,
    pub x: [f64; 3],
    pub jac: [[f64; 3]; 3],
}

/// Full evaluation at an interior point, including physical gradients.
#[derive(Debug, Clone)]
pub struct PointEval {
    pub funcs: Vec<usize>,
    pub values: Vec<f64>,
    /// `grads[a][i] = dR_a / dx_i`.
    pub grads: Vec<[f64; 3]>,
    pub x: [f64; 3],
    pub jac: [[f64; 3]; 3],
    pub det: f64,
}

/// Position, unit outward normal and surface measure factor on a face.
#[derive(Debug, Clone)]
pub struct FaceFrame {
    pub x: [f64; 3],
    pub normal: [f64; 3],
    pub measure: f64,
    pub eval: ParamEval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NurbsPatch {
    basis: TensorBasis,
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl NurbsPatch {
    pub fn new(basis: TensorBasis, points: Vec<[f64; 3]>, weights: Vec<f64>) -> Result<Self> {
        let dim = basis.dim();
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidInput(format!("patch dimension must be 2 or 3, got {dim}")));
        }
        if points.len() != basis.len() || weights.len() != basis.len() {
            return Err(Error::InvalidInput(format!(
                "control net has {} points and {} weights for {} basis functions",
                points.len(),
                weights.len(),
                basis.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0)) {
            return Err(Error::InvalidInput(format!("weights must be positive, found {w}")));
        }
        Ok(NurbsPatch { basis, points, weights })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &TensorBasis {
        &self.basis
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degree(&self, dir: usize) -> usize {
        self.basis.knot_vector(dir).degree()
    }

    pub fn breakpoints(&self) -> Vec<Vec<f64>> {
        self.basis.knot_vectors().iter().map(KnotVector::breakpoints).collect()
    }

    pub fn check_face(&self, face: Face) -> Result<()> {
        if face.dir >= self.dim() {
            return Err(Error::InvalidFace { dir: face.dir, dim: self.dim() });
        }
        Ok(())
    }

    /// Flat indices of the control points in the layer adjacent to a face.
    pub fn face_layer(&self, face: Face) -> Result<Vec<usize>> {
        self.check_face(face)?;
        let shape = self.basis.shape();
        let target = match face.side {
            Side::Low => 0,
            Side::High => shape[face.dir] - 1,
        };
        Ok((0..self.basis.len()).filter(|&f| self.basis.multi(f)[face.dir] == target).collect())
    }

    /// Full parametric point from a point on a face.
    pub fn face_point(&self, face: Face, t: &[f64]) -> Vec<f64> {
        let mut xi = Vec::with_capacity(self.dim());
        let mut it = t.iter();
        for d in 0..self.dim() {
            xi.push(if d == face.dir { face.side.value() } else { *it.next().unwrap() });
        }
        xi
    }

    /// Knot vectors along a face.
    pub fn face_knots(&self, face: Face) -> Vec<KnotVector> {
        face.tangent_dirs(self.dim()).iter().map(|&d| self.basis.knot_vector(d).clone()).collect()
    }

    pub fn eval_param(&self, xi: &[f64]) -> Result<ParamEval> {
        let dim = self.dim();
        if xi.len() != dim {
            return Err(Error::InvalidInput(format!("expected {dim} parametric coordinates, got {}", xi.len())));
        }
        let kvs = self.basis.knot_vectors();
        let evals = kvs.iter().zip(xi).map(|(kv, &x)| kv.eval(x, 1)).collect::<Result<Vec<_>>>()?;
        let counts: Vec<usize> = evals.iter().map(|e| e.values().len()).collect();
        let total: usize = counts.iter().product();

        let mut funcs = Vec::with_capacity(total);
        let mut n = Vec::with_capacity(total);
        let mut dn: Vec<[f64; 3]> = Vec::with_capacity(total);
        let mut loc = vec![0usize; dim];
        let mut multi = vec![0usize; dim];
        for _ in 0..total {
            let mut v = 1.0;
            let mut g = [1.0; 3];
            for d in 0..dim {
                let val = evals[d].ders[0][loc[d]];
                let der = evals[d].ders[1][loc[d]];
                v *= val;
                for (e, ge) in g.iter_mut().enumerate().take(dim) {
                    *ge *= if e == d { der } else { val };
                }
                multi[d] = evals[d].first + loc[d];
            }
            let f = self.basis.flat(&multi);
            let w = self.weights[f];
            funcs.push(f);
            n.push(v * w);
            dn.push([g[0] * w, g[1] * w, if dim == 3 { g[2] * w } else { 0.0 }]);
            advance(&mut loc, &counts);
        }
        let wsum: f64 = n.iter().sum();
        let mut dw = [0.0; 3];
        for g in &dn {
            for d in 0..3 {
                dw[d] += g[d];
            }
        }
        let mut values = Vec::with_capacity(total);
        let mut dxi = Vec::with_capacity(total);
        let mut x = [0.0; 3];
        let mut jac = [[0.0; 3]; 3];
        for a in 0..total {
            let r = n[a] / wsum;
            let mut g = [0.0; 3];
            for d in 0..dim {
                g[d] = (dn[a][d] - r * dw[d]) / wsum;
            }
            let p = self.points[funcs[a]];
            for i in 0..dim {
                x[i] += r * p[i];
                for j in 0..dim {
                    jac[i][j] += g[j] * p[i];
                }
            }
            values.push(r);
            dxi.push(g);
        }
        Ok(ParamEval { funcs, values, dxi, x, jac })
    }

    /// Geometry map at `xi` with physical basis gradients. A non-positive
    /// Jacobian determinant is an error.
    pub fn eval_map(&self, xi: &[f64]) -> Result<PointEval> {
        let pe = self.eval_param(xi)?;
        let dim = self.dim();
        let det = det(&pe.jac, dim);
        if !(det > 0.0) {
            return Err(Error::DegenerateGeometry { xi: xi.to_vec(), det });
        }
        let inv = inverse(&pe.jac, dim, det);
        let grads = pe
            .dxi
            .iter()
            .map(|g| {
                // dR/dx_i = sum_j dR/dxi_j * dxi_j/dx_i
                let mut out = [0.0; 3];
                for i in 0..dim {
                    for j in 0..dim {
                        out[i] += g[j] * inv[j][i];
                    }
                }
                out
            })
            .collect();
        Ok(PointEval { funcs: pe.funcs, values: pe.values, grads, x: pe.x, jac: pe.jac, det })
    }

    /// Position only.
    pub fn point(&self, xi: &[f64]) -> Result<[f64; 3]> {
        Ok(self.eval_param(xi)?.x)
    }

    /// Position, outward unit normal and surface factor at a face point
    /// given by its face-parametric coordinates.
    pub fn boundary_frame(&self, face: Face, t: &[f64]) -> Result<FaceFrame> {
        self.check_face(face)?;
        let dim = self.dim();
        let xi = self.face_point(face, t);
        let eval = self.eval_param(&xi)?;
        let col = |j: usize| [eval.jac[0][j], eval.jac[1][j], eval.jac[2][j]];
        let tdirs = face.tangent_dirs(dim);
        let m = if dim == 2 {
            let t0 = col(tdirs[0]);
            [t0[1], -t0[0], 0.0]
        } else {
            cross(&col(tdirs[0]), &col(tdirs[1]))
        };
        let measure = norm(&m);
        if !(measure > 0.0) {
            return Err(Error::DegenerateGeometry { xi, det: measure });
        }
        let out = col(face.dir);
        let sign = match face.side {
            Side::Low => -1.0,
            Side::High => 1.0,
        };
        let orient = sign * dot(&m, &out);
        let s = if orient < 0.0 { -1.0 } else { 1.0 };
        let normal = [s * m[0] / measure, s * m[1] / measure, s * m[2] / measure];
        Ok(FaceFrame { x: eval.x, normal, measure, eval })
    }

    /// Patch with the same geometry over finer knot vectors (nested).
    pub fn refine_to(&self, kvs: &[KnotVector]) -> Result<NurbsPatch> {
        let mut hom = self.homogeneous();
        let mut shape = self.basis.shape();
        for (d, kv) in kvs.iter().enumerate() {
            let t = self.basis.knot_vector(d).refinement_matrix(kv)?;
            hom = apply_dir(&hom, &shape, d, &t);
            shape[d] = kv.num_basis();
        }
        Self::from_homogeneous(TensorBasis::new(kvs.to_vec())?, &hom)
    }

    pub fn refine_uniform(&self, levels: usize) -> Result<NurbsPatch> {
        let kvs: Vec<KnotVector> =
            self.basis.knot_vectors().iter().map(|kv| kv.refine_uniform(levels)).collect();
        self.refine_to(&kvs)
    }

    /// Elevates a single-element (Bézier) patch to the given degrees.
    pub fn elevate_bezier(&self, degrees: &[usize]) -> Result<NurbsPatch> {
        let mut hom = self.homogeneous();
        let mut shape = self.basis.shape();
        let mut kvs = Vec::new();
        for d in 0..self.dim() {
            let kv = self.basis.knot_vector(d);
            if kv.num_elements() != 1 {
                return Err(Error::InvalidInput("degree elevation needs a single-element patch".into()));
            }
            let p = kv.degree();
            let q = degrees[d];
            if q < p {
                return Err(Error::InvalidInput(format!("cannot lower degree {p} to {q}")));
            }
            let t = bezier_elevation_matrix(p, q - p);
            hom = apply_dir(&hom, &shape, d, &t);
            shape[d] = q + 1;
            kvs.push(KnotVector::uniform(q, 1)?);
        }
        Self::from_homogeneous(TensorBasis::new(kvs)?, &hom)
    }

    fn homogeneous(&self) -> Vec<[f64; 4]> {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| [p[0] * w, p[1] * w, p[2] * w, w])
            .collect()
    }

    fn from_homogeneous(basis: TensorBasis, hom: &[[f64; 4]]) -> Result<NurbsPatch> {
        let points = hom.iter().map(|h| [h[0] / h[3], h[1] / h[3], h[2] / h[3]]).collect();
        let weights = hom.iter().map(|h| h[3]).collect();
        NurbsPatch::new(basis, points, weights)
    }

    /// Largest physical diameter over all elements.
    pub fn mesh_size(&self) -> Result<f64> {
        let bps = self.breakpoints();
        let rule = quadrature::gauss_rule(&bps, 1);
        let mut h: f64 = 0.0;
        for e in &rule.elements {
            h = h.max(self.element_diameter(&e.bounds)?);
        }
        Ok(h)
    }

    /// Largest physical diameter over the elements of a face.
    pub fn face_mesh_size(&self, face: Face) -> Result<f64> {
        self.check_face(face)?;
        let bps = self.breakpoints();
        let tdirs = face.tangent_dirs(self.dim());
        let face_bps: Vec<Vec<f64>> = tdirs.iter().map(|&d| bps[d].clone()).collect();
        let rule = quadrature::gauss_rule(&face_bps, 1);
        let mut h: f64 = 0.0;
        for e in &rule.elements {
            let mut bounds = Vec::new();
            let mut it = e.bounds.iter();
            for d in 0..self.dim() {
                let s = face.side.value();
                bounds.push(if d == face.dir { (s, s) } else { *it.next().unwrap() });
            }
            h = h.max(self.element_diameter(&bounds)?);
        }
        Ok(h)
    }

    /// Diameter estimated from a 5-point-per-direction lattice.
    fn element_diameter(&self, bounds: &[(f64, f64)]) -> Result<f64> {
        const S: usize = 5;
        let dim = bounds.len();
        let counts = vec![S; dim];
        let mut loc = vec![0usize; dim];
        let mut pts = Vec::with_capacity(S.pow(dim as u32));
        for _ in 0..S.pow(dim as u32) {
            let xi: Vec<f64> = (0..dim)
                .map(|d| {
                    let (a, b) = bounds[d];
                    a + (b - a) * loc[d] as f64 / (S - 1) as f64
                })
                .collect();
            pts.push(self.point(&xi)?);
            advance(&mut loc, &counts);
        }
        let mut h: f64 = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                h = h.max(dist(&pts[i], &pts[j]));
            }
        }
        Ok(h)
    }
}

/// Applies a per-direction linear operator (`rows x cols`) along `dir` of a
/// tensor array of homogeneous points.
fn apply_dir(data: &[[f64; 4]], shape: &[usize], dir: usize, t: &[Vec<f64>]) -> Vec<[f64; 4]> {
    let mut new_shape = shape.to_vec();
    new_shape[dir] = t.len();
    let total: usize = new_shape.iter().product();
    let stride = |s: &[usize], d: usize| s[..d].iter().product::<usize>();
    let so = stride(shape, dir);
    let mut out = vec![[0.0; 4]; total];
    let mut idx = vec![0usize; shape.len()];
    for _ in 0..total {
        let flat_new: usize = idx.iter().enumerate().map(|(d, &i)| i * stride(&new_shape, d)).sum();
        let base_old: usize =
            idx.iter().enumerate().filter(|(d, _)| *d != dir).map(|(d, &i)| i * stride(shape, d)).sum();
        let row = &t[idx[dir]];
        let mut acc = [0.0; 4];
        for (c, &coef) in row.iter().enumerate() {
            if coef != 0.0 {
                let src = data[base_old + c * so];
                for k in 0..4 {
                    acc[k] += coef * src[k];
                }
            }
        }
        out[flat_new] = acc;
        advance(&mut idx, &new_shape);
    }
    out
}

pub(crate) fn det(j: &[[f64; 3]; 3], dim: usize) -> f64 {
    if dim == 2 {
        j[0][0] * j[1][1] - j[0][1] * j[1][0]
    } else {
        j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
            + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0])
    }
}

pub(crate) fn inverse(j: &[[f64; 3]; 3], dim: usize, det: f64) -> [[f64; 3]; 3] {
    let mut inv = [[0.0; 3]; 3];
    if dim == 2 {
        inv[0][0] = j[1][1] / det;
        inv[0][1] = -j[0][1] / det;
        inv[1][0] = -j[1][0] / det;
        inv[1][1] = j[0][0] / det;
    } else {
        for r in 0..3 {
            for c in 0..3 {
                let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
                let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
                inv[r][c] = (j[r1][c1] * j[r2][c2] - j[r1][c2] * j[r2][c1]) / det;
            }
        }
    }
    inv
}

pub(crate) fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    norm(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

/// Identity map of `[0,1]^dim` with the given knot vectors.
pub fn unit_box(kvs: Vec<KnotVector>) -> Result<NurbsPatch> {
    let basis = TensorBasis::new(kvs)?;
    let grev: Vec<Vec<f64>> = basis.knot_vectors().iter().map(KnotVector::greville).collect();
    let points = (0..basis.len())
        .map(|f| {
            let m = basis.multi(f);
            let mut p = [0.0; 3];
            for (d, &i) in m.iter().enumerate() {
                p[d] = grev[d][i];
            }
            p
        })
        .collect();
    let weights = vec![1.0; basis.len()];
    NurbsPatch::new(basis, points, weights)
}
