//! Exact benchmark geometries and graded breakpoint sequences.
//!
//! Quarter disc (2D), directions: 0 radial (low side collapsed onto the
//! centre, high side the arc), 1 angular (low side the ray to the contact
//! pole `(0, -R)`, high side the ray to `(R, 0)`).
//!
//! Octant of sphere (3D), directions: 0 radial (low side collapsed onto the
//! centre, high side the sphere), 1 latitude (low side the equator plane
//! `z = 0`, high side collapsed onto the pole `(0, 0, -R)`), 2 longitude
//! (low side the plane `y = 0`, high side the plane `x = 0`).

use std::f64::consts::FRAC_1_SQRT_2;

use super::{Face, NurbsPatch, Side};
use crate::error::{Error, Result};
use crate::splines::{KnotVector, TensorBasis};

/// End of the parametric interval that receives the refined band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefinedEnd {
    Low,
    High,
}

/// Breakpoints with `round(fraction_elems * n)` uniform spans packed into the
/// `fraction_length` band at `end` and the rest spread uniformly elsewhere.
pub fn graded_knots(n: usize, fraction_elems: f64, fraction_length: f64, end: RefinedEnd) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("graded mesh needs at least 2 elements, got {n}")));
    }
    if !(fraction_length > 0.0 && fraction_length < 1.0) {
        return Err(Error::InvalidInput(format!("band length fraction {fraction_length} not in (0, 1)")));
    }
    let k = (fraction_elems * n as f64).round() as usize;
    if k < 1 || k >= n {
        return Err(Error::InvalidInput(format!(
            "{k} of {n} spans in the refined band; need at least one on each side"
        )));
    }
    let outer = n - k;
    let edge = 1.0 - fraction_length;
    let mut bps: Vec<f64> = (0..=outer).map(|i| edge * i as f64 / outer as f64).collect();
    bps.extend((1..=k).map(|i| edge + fraction_length * i as f64 / k as f64));
    *bps.last_mut().unwrap() = 1.0;
    if end == RefinedEnd::Low {
        bps = bps.iter().rev().map(|b| 1.0 - b).collect();
        bps[0] = 0.0;
    }
    Ok(bps)
}

/// Contact face of both benchmark shapes (the curved boundary).
pub const CONTACT_FACE: Face = Face::new(0, Side::High);

/// Exact quadratic quarter disc of radius `r` as a single Bézier element.
pub fn make_quarter_disc(r: f64) -> Result<NurbsPatch> {
    check_radius(r)?;
    let arc = [[0.0, -1.0], [1.0, -1.0], [1.0, 0.0]];
    let w = [1.0, FRAC_1_SQRT_2, 1.0];
    let scale = [0.0, 0.5, 1.0];
    let mut points = Vec::with_capacity(9);
    let mut weights = Vec::with_capacity(9);
    for a in arc.iter().zip(&w) {
        for s in scale {
            points.push([s * r * a.0[0], s * r * a.0[1], 0.0]);
            weights.push(*a.1);
        }
    }
    let kv = KnotVector::uniform(2, 1)?;
    NurbsPatch::new(TensorBasis::new(vec![kv.clone(), kv])?, points, weights)
}

/// Exact quadratic octant of a sphere of radius `r` as a single Bézier
/// element, built as a surface of revolution.
pub fn make_octant_sphere(r: f64) -> Result<NurbsPatch> {
    check_radius(r)?;
    // profile (rho, z) from equator to the pole, then longitude from +x to +y
    let profile = [[1.0, 0.0], [1.0, -1.0], [0.0, -1.0]];
    let circle = [[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let w = [1.0, FRAC_1_SQRT_2, 1.0];
    let scale = [0.0, 0.5, 1.0];
    let mut points = Vec::with_capacity(27);
    let mut weights = Vec::with_capacity(27);
    for k in 0..3 {
        for j in 0..3 {
            for s in scale {
                let rho = profile[j][0];
                points.push([s * r * rho * circle[k][0], s * r * rho * circle[k][1], s * r * profile[j][1]]);
                weights.push(w[j] * w[k]);
            }
        }
    }
    let kv = KnotVector::uniform(2, 1)?;
    NurbsPatch::new(TensorBasis::new(vec![kv.clone(), kv.clone(), kv])?, points, weights)
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {r}")));
    }
    Ok(())
}

/// Elevates a Bézier shape to degree `p` in every direction and inserts the
/// given breakpoints (interior knots of multiplicity one).
pub fn build_mesh(base: &NurbsPatch, p: usize, breakpoints: &[Vec<f64>]) -> Result<NurbsPatch> {
    let elevated = base.elevate_bezier(&vec![p; base.dim()])?;
    let kvs =
        breakpoints.iter().map(|b| KnotVector::from_breakpoints(p, b)).collect::<Result<Vec<_>>>()?;
    elevated.refine_to(&kvs)
}
