//! B-spline machinery on open knot vectors over the unit parametric interval.
//!
//! Evaluation follows the Cox–de Boor recursion in the triangular-table form
//! (values and derivatives of the `p + 1` functions that are nonzero on a
//! span). Refinement is plain knot insertion, so refined spaces are nested.

use crate::error::{Error, Result};

/// Highest polynomial degree supported by the basis kernels.
pub const MAX_DEGREE: usize = 4;

/// Slack used when a parameter falls a rounding error outside `[0, 1]`.
const DOMAIN_SLACK: f64 = 1e-12;

/// Open knot vector on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

/// Nonzero basis functions (and derivatives) at one parametric point.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisEval {
    /// Knot span index `i` with `knots[i] <= xi < knots[i + 1]`.
    pub span: usize,
    /// Global index of the first nonzero function (`span - degree`).
    pub first: usize,
    /// `ders[k][j]`: k-th derivative of function `first + j`.
    pub ders: Vec<Vec<f64>>,
}

impl BasisEval {
    pub fn values(&self) -> &[f64] {
        &self.ders[0]
    }

    pub fn derivative(&self, order: usize) -> &[f64] {
        &self.ders[order]
    }
}

impl KnotVector {
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::UnsupportedDegree { degree, reason: "maximum supported degree is 4" });
        }
        let bad = |msg: String| Err(Error::InvalidKnotVector(msg));
        if knots.iter().any(|k| !k.is_finite()) {
            return bad("knots must be finite".into());
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return bad("knots must be non-decreasing".into());
        }
        if knots.len() < 2 * (degree + 1) {
            return bad(format!("need at least {} knots for degree {degree}", 2 * (degree + 1)));
        }
        if knots[0] != 0.0 || knots[knots.len() - 1] != 1.0 {
            return bad("parametric domain must be [0, 1]".into());
        }
        let kv = KnotVector { degree, knots };
        let mult = kv.multiplicities();
        let last = mult.len() - 1;
        if mult.len() < 2 || mult[0] != degree + 1 || mult[last] != degree + 1 {
            return bad(format!("end knots must be repeated exactly {} times", degree + 1));
        }
        let max_interior = degree.max(1);
        if mult[1..last].iter().any(|&m| m > max_interior) {
            return bad(format!("interior multiplicity exceeds {max_interior}"));
        }
        Ok(kv)
    }

    /// Open knot vector whose interior knots are the given breakpoints,
    /// each with multiplicity one.
    pub fn from_breakpoints(degree: usize, breakpoints: &[f64]) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidKnotVector("need at least two breakpoints".into()));
        }
        let mut knots = vec![breakpoints[0]; degree + 1];
        knots.extend_from_slice(&breakpoints[1..breakpoints.len() - 1]);
        knots.extend(std::iter::repeat_n(breakpoints[breakpoints.len() - 1], degree + 1));
        Self::new(degree, knots)
    }

    pub fn uniform(degree: usize, n_elems: usize) -> Result<Self> {
        if n_elems == 0 {
            return Err(Error::InvalidKnotVector("need at least one element".into()));
        }
        let bps: Vec<f64> = (0..=n_elems).map(|i| i as f64 / n_elems as f64).collect();
        Self::from_breakpoints(degree, &bps)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Distinct knot values.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for &k in &self.knots {
            if out.last() != Some(&k) {
                out.push(k);
            }
        }
        out
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        let mut prev = f64::NAN;
        for &k in &self.knots {
            if k == prev {
                *out.last_mut().unwrap() += 1;
            } else {
                out.push(1);
                prev = k;
            }
        }
        out
    }

    pub fn num_elements(&self) -> usize {
        self.breakpoints().len() - 1
    }

    /// Nonempty knot spans as `(lo, hi)` pairs.
    pub fn elements(&self) -> Vec<(f64, f64)> {
        self.breakpoints().windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Interior multiplicities at most `p - 1` (global `C^1` or smoother).
    pub fn is_smooth(&self) -> bool {
        let mult = self.multiplicities();
        let last = mult.len() - 1;
        mult[1..last].iter().all(|&m| m + 1 <= self.degree)
    }

    /// Half-open span lookup, closed at the right end of the domain.
    pub fn find_span(&self, xi: f64) -> Result<usize> {
        let lo = self.knots[0];
        let hi = self.knots[self.knots.len() - 1];
        if !(xi >= lo - DOMAIN_SLACK && xi <= hi + DOMAIN_SLACK) {
            return Err(Error::Domain { value: xi, lo, hi });
        }
        let n = self.num_basis();
        if xi >= self.knots[n] {
            return Ok(n - 1);
        }
        if xi <= lo {
            return Ok(self.degree);
        }
        // largest i with knots[i] <= xi, restricted to p..n-1
        let (mut low, mut high) = (self.degree, n);
        while high - low > 1 {
            let mid = (low + high) / 2;
            if xi < self.knots[mid] {
                high = mid;
            } else {
                low = mid;
            }
        }
        Ok(low)
    }

    /// Values and derivatives up to `deriv_order` of the nonzero functions
    /// at `xi`. Derivatives of order above the degree are zero.
    pub fn eval(&self, xi: f64, deriv_order: usize) -> Result<BasisEval> {
        let span = self.find_span(xi)?;
        let xi = xi.clamp(self.knots[0], self.knots[self.knots.len() - 1]);
        let ders = ders_basis_funs(span, xi, self.degree, deriv_order, &self.knots);
        Ok(BasisEval { span, first: span - self.degree, ders })
    }

    /// Value of every basis function at `xi` (dense, mostly zeros).
    pub fn eval_all(&self, xi: f64) -> Result<Vec<f64>> {
        let e = self.eval(xi, 0)?;
        let mut out = vec![0.0; self.num_basis()];
        for (j, v) in e.values().iter().enumerate() {
            out[e.first + j] = *v;
        }
        Ok(out)
    }

    /// Bisects every nonempty span `levels` times. Existing knots are kept,
    /// so the refined space contains the original one.
    pub fn refine_uniform(&self, levels: usize) -> KnotVector {
        let mut kv = self.clone();
        for _ in 0..levels {
            let mids: Vec<f64> = kv.elements().iter().map(|(a, b)| 0.5 * (a + b)).collect();
            let mut knots = kv.knots.clone();
            knots.extend(mids);
            knots.sort_by(f64::total_cmp);
            kv = KnotVector { degree: kv.degree, knots };
        }
        kv
    }

    /// Knot vector of degree `p - 2` over the same breakpoints: the first two
    /// and last two knot values are dropped, so the end multiplicity goes
    /// from `p + 1` to `p - 1` and the result is again open.
    pub fn trim_for_dual(&self) -> Result<KnotVector> {
        if self.degree < 2 {
            return Err(Error::UnsupportedDegree {
                degree: self.degree,
                reason: "the multiplier space needs a primal degree of at least 2",
            });
        }
        let n = self.knots.len();
        KnotVector::new(self.degree - 2, self.knots[2..n - 2].to_vec())
    }

    /// Greville abscissae; for degree zero the span midpoints.
    pub fn greville(&self) -> Vec<f64> {
        let p = self.degree;
        (0..self.num_basis())
            .map(|i| {
                if p == 0 {
                    0.5 * (self.knots[i] + self.knots[i + 1])
                } else {
                    self.knots[i + 1..=i + p].iter().sum::<f64>() / p as f64
                }
            })
            .collect()
    }

    /// Dense operator `T` (rows = functions of `finer`, columns = functions of
    /// `self`) mapping coefficients: `c_fine = T c_coarse`.
    pub fn refinement_matrix(&self, finer: &KnotVector) -> Result<Vec<Vec<f64>>> {
        if finer.degree != self.degree {
            return Err(Error::InvalidInput("refinement must keep the degree".into()));
        }
        let to_insert = knot_difference(&finer.knots, &self.knots)?;
        let n0 = self.num_basis();
        let mut knots = self.knots.clone();
        let mut coeffs: Vec<Vec<f64>> =
            (0..n0).map(|i| (0..n0).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        for u in to_insert {
            let kv = KnotVector { degree: self.degree, knots: knots.clone() };
            let k = kv.find_span(u)?;
            coeffs = insert_knot(&knots, self.degree, k, u, &coeffs);
            knots.insert(k + 1, u);
        }
        Ok(coeffs)
    }
}

/// Coefficient rows after inserting `u` once into span `k` (Boehm).
fn insert_knot(knots: &[f64], p: usize, k: usize, u: f64, coeffs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = coeffs.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..=n {
        if i + p <= k {
            out.push(coeffs[i].clone());
        } else if i > k {
            out.push(coeffs[i - 1].clone());
        } else {
            let alpha = (u - knots[i]) / (knots[i + p] - knots[i]);
            let row = coeffs[i]
                .iter()
                .zip(&coeffs[i - 1])
                .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
                .collect();
            out.push(row);
        }
    }
    out
}

/// Multiset difference `fine \ coarse`; errors if `coarse` is not contained.
fn knot_difference(fine: &[f64], coarse: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < fine.len() {
        if j < coarse.len() && fine[i] == coarse[j] {
            i += 1;
            j += 1;
        } else if j < coarse.len() && coarse[j] < fine[i] {
            return Err(Error::InvalidInput("refined knot vector drops an original knot".into()));
        } else {
            out.push(fine[i]);
            i += 1;
        }
    }
    if j != coarse.len() {
        return Err(Error::InvalidInput("refined knot vector drops an original knot".into()));
    }
    Ok(out)
}

/// Degree-elevation operator for a single Bézier segment: rows are the
/// `p + t + 1` elevated coefficients as combinations of the `p + 1` originals.
pub fn bezier_elevation_matrix(p: usize, t: usize) -> Vec<Vec<f64>> {
    let mut m: Vec<Vec<f64>> =
        (0..=p).map(|i| (0..=p).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for q in p..p + t {
        // one elevation step q -> q + 1
        let mut next = Vec::with_capacity(q + 2);
        for i in 0..=q + 1 {
            let a = i as f64 / (q + 1) as f64;
            let row = (0..=p)
                .map(|c| {
                    let prev = if i > 0 { m[i - 1][c] } else { 0.0 };
                    let cur = if i <= q { m[i][c] } else { 0.0 };
                    a * prev + (1.0 - a) * cur
                })
                .collect();
            next.push(row);
        }
        m = next;
    }
    m
}

fn ders_basis_funs(span: usize, xi: f64, p: usize, n: usize, knots: &[f64]) -> Vec<Vec<f64>> {
    let mut ders = vec![vec![0.0; p + 1]; n + 1];
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = xi - knots[span + 1 - j];
        right[j] = knots[span + j] - xi;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let nd = n.min(p);
    let mut a = vec![vec![0.0; p + 1]; 2];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=nd {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = p as f64;
    for k in 1..=nd {
        for v in ders[k].iter_mut() {
            *v *= factor;
        }
        factor *= (p - k) as f64;
    }
    ders
}

/// Tensor product of univariate bases, flattened lexicographically with the
/// first direction running fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorBasis {
    kvs: Vec<KnotVector>,
}

impl TensorBasis {
    pub fn new(kvs: Vec<KnotVector>) -> Result<Self> {
        if kvs.is_empty() || kvs.len() > 3 {
            return Err(Error::InvalidInput(format!("tensor basis needs 1..=3 directions, got {}", kvs.len())));
        }
        Ok(TensorBasis { kvs })
    }

    pub fn dim(&self) -> usize {
        self.kvs.len()
    }

    pub fn knot_vector(&self, dir: usize) -> &KnotVector {
        &self.kvs[dir]
    }

    pub fn knot_vectors(&self) -> &[KnotVector] {
        &self.kvs
    }

    pub fn shape(&self) -> Vec<usize> {
        self.kvs.iter().map(KnotVector::num_basis).collect()
    }

    pub fn len(&self) -> usize {
        self.kvs.iter().map(KnotVector::num_basis).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (d, kv) in self.kvs.iter().enumerate() {
            idx += multi[d] * stride;
            stride *= kv.num_basis();
        }
        idx
    }

    pub fn multi(&self, mut flat: usize) -> Vec<usize> {
        self.kvs
            .iter()
            .map(|kv| {
                let n = kv.num_basis();
                let i = flat % n;
                flat /= n;
                i
            })
            .collect()
    }

    /// Values of the nonzero tensor functions at `xi` as `(flat index, value)`.
    pub fn eval_values(&self, xi: &[f64]) -> Result<Vec<(usize, f64)>> {
        let evals: Vec<BasisEval> =
            self.kvs.iter().zip(xi).map(|(kv, &x)| kv.eval(x, 0)).collect::<Result<_>>()?;
        let counts: Vec<usize> = evals.iter().map(|e| e.values().len()).collect();
        let total: usize = counts.iter().product();
        let mut out = Vec::with_capacity(total);
        let mut local = vec![0usize; self.dim()];
        let mut multi = vec![0usize; self.dim()];
        for _ in 0..total {
            let mut v = 1.0;
            for d in 0..self.dim() {
                v *= evals[d].values()[local[d]];
                multi[d] = evals[d].first + local[d];
            }
            out.push((self.flat(&multi), v));
            advance(&mut local, &counts);
        }
        Ok(out)
    }
}

/// Odometer increment over a box of counts (first index fastest).
pub(crate) fn advance(idx: &mut [usize], counts: &[usize]) {
    for d in 0..idx.len() {
        idx[d] += 1;
        if idx[d] < counts[d] {
            return;
        }
        idx[d] = 0;
    }
}
