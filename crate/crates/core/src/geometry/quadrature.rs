//! Gauss–Legendre rules, per element and tensorised.

use crate::splines::advance;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "a Gauss rule needs at least one point");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// Gauss points mapped to `[a, b]`.
pub fn gauss_on(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    x.iter().zip(&w).map(|(xi, wi)| (a + half * (xi + 1.0), half * wi)).collect()
}

/// One tensor element: parametric box and its quadrature points.
#[derive(Debug, Clone)]
pub struct QuadElement {
    /// Per-direction element index.
    pub index: Vec<usize>,
    /// Per-direction `(lo, hi)`.
    pub bounds: Vec<(f64, f64)>,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl QuadElement {
    pub fn measure(&self) -> f64 {
        self.bounds.iter().map(|(a, b)| b - a).product()
    }
}

/// Tensor Gauss–Legendre quadrature over the elements spanned by
/// per-direction breakpoints.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub elements: Vec<QuadElement>,
}

impl QuadratureRule {
    pub fn num_points(&self) -> usize {
        self.elements.iter().map(|e| e.weights.len()).sum()
    }
}

/// Tensor rule with `n` points per direction on every element of the grid
/// defined by `breakpoints` (first direction fastest).
pub fn gauss_rule(breakpoints: &[Vec<f64>], n: usize) -> QuadratureRule {
    let dim = breakpoints.len();
    let counts: Vec<usize> = breakpoints.iter().map(|b| b.len() - 1).collect();
    let n_elems: usize = counts.iter().product();
    let mut elements = Vec::with_capacity(n_elems);
    let mut idx = vec![0usize; dim];
    for _ in 0..n_elems {
        let bounds: Vec<(f64, f64)> =
            (0..dim).map(|d| (breakpoints[d][idx[d]], breakpoints[d][idx[d] + 1])).collect();
        elements.push(tensor_element(idx.clone(), bounds, n));
        advance(&mut idx, &counts);
    }
    QuadratureRule { elements }
}

/// Tensor Gauss points on one parametric box.
pub fn tensor_element(index: Vec<usize>, bounds: Vec<(f64, f64)>, n: usize) -> QuadElement {
    let rules: Vec<Vec<(f64, f64)>> = bounds.iter().map(|&(a, b)| gauss_on(a, b, n)).collect();
    let dim = bounds.len();
    let total = n.pow(dim as u32);
    let mut points = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut loc = vec![0usize; dim];
    let counts = vec![n; dim];
    for _ in 0..total {
        points.push((0..dim).map(|d| rules[d][loc[d]].0).collect());
        weights.push((0..dim).map(|d| rules[d][loc[d]].1).product());
        advance(&mut loc, &counts);
    }
    QuadElement { index, bounds, points, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(f: impl Fn(f64) -> f64, n: usize) -> f64 {
        gauss_on(0.0, 1.0, n).iter().map(|(x, w)| w * f(*x)).sum()
    }

    #[test]
    fn exactness() {
        assert!((integrate(|x| x * x, 2) - 1.0 / 3.0).abs() < 1e-15);
        for n in 1..8 {
            assert!((integrate(|_| 1.0, n) - 1.0).abs() < 1e-15);
        }
        assert!((integrate(|x| x.powi(5), 3) - 1.0 / 6.0).abs() < 1e-15);
        for n in 1..10 {
            let deg = 2 * n - 1;
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((integrate(|x| x.powi(deg as i32), n) - exact).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn nodes_sorted_and_symmetric() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            assert!(w.iter().all(|&v| v > 0.0));
            for i in 0..n {
                assert!((x[i] + x[n - 1 - i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn tensor_rule_weights() {
        let bps = vec![vec![0.0, 0.25, 1.0], vec![0.0, 0.5, 0.75, 1.0]];
        let q = gauss_rule(&bps, 3);
        assert_eq!(q.elements.len(), 6);
        for e in &q.elements {
            let s: f64 = e.weights.iter().sum();
            assert!((s - e.measure()).abs() < 1e-15);
        }
        // x^2 y^3 over the unit square
        let v: f64 = q
            .elements
            .iter()
            .flat_map(|e| e.points.iter().zip(&e.weights))
            .map(|(p, w)| w * p[0] * p[0] * p[1].powi(3))
            .sum();
        assert!((v - 1.0 / 12.0).abs() < 1e-15);
    }
}
