//! Isogeometric analysis of frictionless contact between an elastic body and
//! a rigid plane.
//!
//! Displacements live in a tensor-product NURBS space of degree `p`; the
//! contact pressure is a Lagrange multiplier discretised with B-splines of
//! degree `p - 2` on the contact face. The non-smooth complementarity
//! conditions are handled with an augmented Lagrangian and solved by a
//! semismooth Newton method with an active-set update at every iteration.
//!
//! Module layout, bottom up:
//! - [`splines`]: knot vectors and B-spline evaluation.
//! - [`geometry`]: NURBS maps, quadrature and the benchmark shapes.
//! - [`spaces`]: primal (displacement) and dual (multiplier) spaces.
//! - [`elasticity`]: linear and Neo-Hookean volume terms, pressure loads.
//! - [`contact`]: rigid plane, projection, active set, residual and tangent.
//! - [`solver`]: Newton loops and the sparse direct solve.
//! - [`bench`]: Hertz references, error norms and convergence studies.
//! - [`config`]: run configuration used by the command-line tool.

pub mod bench;
pub mod config;
pub mod contact;
pub mod elasticity;
pub mod error;
pub mod geometry;
pub mod solver;
pub mod sparse;
pub mod spaces;
pub mod splines;

pub use error::{Error, Result};
