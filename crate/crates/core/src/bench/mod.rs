//! Hertz benchmarks: analytical references, error norms against a refined
//! solution, and convergence tables.

pub mod output;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::contact::{build_projection, AugmentedParams, ProjectionData, RigidPlane};
use crate::elasticity::{assemble_neumann_pressure, default_quadrature, Material};
use crate::error::{Error, Result};
use crate::geometry::quadrature::gauss_rule;
use crate::geometry::shapes::{build_mesh, graded_knots, make_octant_sphere, make_quarter_disc, RefinedEnd, CONTACT_FACE};
use crate::geometry::{Face, NurbsPatch, Side};
use crate::solver::{solve_linear_contact, solve_nonlinear_contact, ContactProblem, NewtonConfig, SolveReport, SystemState};
use crate::spaces::{build_dual, build_primal, face_rule, DirichletBc, DualSpace, PrimalSpace};

/// Closed-form Hertz contact of a cylinder (2D, plane strain) or sphere (3D)
/// pressed onto a rigid plane by a uniform pressure on the flat face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HertzAnalytic {
    pub dim: usize,
    pub radius: f64,
    pub young: f64,
    pub poisson: f64,
    pub pressure: f64,
    /// Contact half-width (2D) or radius (3D).
    pub a: f64,
    /// Peak pressure.
    pub p0: f64,
}

pub fn hertz_solution(dim: usize, radius: f64, young: f64, poisson: f64, pressure: f64) -> Result<HertzAnalytic> {
    if !(radius > 0.0 && young > 0.0 && pressure > 0.0) || !(0.0..0.5).contains(&poisson) {
        return Err(Error::InvalidInput("Hertz parameters must be positive with 0 <= nu < 0.5".into()));
    }
    let (r, e, nu, p) = (radius, young, poisson, pressure);
    let (a, p0) = match dim {
        2 => {
            let a = (8.0 * r * r * p * (1.0 - nu * nu) / (std::f64::consts::PI * e)).sqrt();
            (a, 4.0 * r * p / (std::f64::consts::PI * a))
        }
        3 => {
            // total load of the pressure acting on the flat disc
            let f = std::f64::consts::PI * r * r * p;
            let a = (3.0 * f * r * (1.0 - nu * nu) / (4.0 * e)).cbrt();
            (a, 3.0 * r * r * p / (2.0 * a * a))
        }
        _ => return Err(Error::InvalidInput(format!("Hertz solution needs dimension 2 or 3, got {dim}"))),
    };
    Ok(HertzAnalytic { dim, radius, young, poisson, pressure, a, p0 })
}

impl HertzAnalytic {
    /// Pressure at distance `r` from the first contact point.
    pub fn pressure_at(&self, r: f64) -> f64 {
        let s = r / self.a;
        if s.abs() >= 1.0 {
            0.0
        } else {
            self.p0 * (1.0 - s * s).sqrt()
        }
    }

    /// 3D contact radius with the applied pressure in place of the total
    /// load, reported next to the force-based value.
    pub fn a_pressure_only(&self) -> f64 {
        let nu = self.poisson;
        (3.0 * self.radius.powi(3) * self.pressure * (1.0 - nu * nu) / (4.0 * self.young)).cbrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Hertz2dP003,
    Hertz2dP01,
    Hertz3dP5e4,
    Hertz2dLargeUy04,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::Hertz2dP003, Scenario::Hertz2dP01, Scenario::Hertz3dP5e4, Scenario::Hertz2dLargeUy04];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Hertz2dP003 => "hertz2d_p003",
            Scenario::Hertz2dP01 => "hertz2d_p01",
            Scenario::Hertz3dP5e4 => "hertz3d_p5e-4",
            Scenario::Hertz2dLargeUy04 => "hertz2d_large_uy04",
        }
    }

    pub fn dim(self) -> usize {
        if self == Scenario::Hertz3dP5e4 {
            3
        } else {
            2
        }
    }

    pub fn radius(self) -> f64 {
        1.0
    }

    pub fn material(self) -> Material {
        let m = if self == Scenario::Hertz2dLargeUy04 { Material::neo_hookean(1.0, 0.3) } else { Material::linear(1.0, 0.3) };
        m.expect("benchmark material constants are valid")
    }

    /// Applied pressure on the flat face, if pressure-driven.
    pub fn pressure(self) -> Option<f64> {
        match self {
            Scenario::Hertz2dP003 => Some(0.003),
            Scenario::Hertz2dP01 => Some(0.01),
            Scenario::Hertz3dP5e4 => Some(5e-4),
            Scenario::Hertz2dLargeUy04 => None,
        }
    }

    pub fn hertz(self) -> Option<HertzAnalytic> {
        let m = self.material();
        self.pressure().map(|p| hertz_solution(self.dim(), self.radius(), m.young, m.poisson, p).expect("valid Hertz data"))
    }

    pub fn default_grading(self) -> Grading {
        match self {
            Scenario::Hertz3dP5e4 => Grading { base_elems: 4, fraction_elems: 0.75, fraction_length: 0.1 },
            // the contact half-width sits at the edge of a 10% band
            Scenario::Hertz2dP01 => Grading { base_elems: 8, fraction_elems: 0.8, fraction_length: 0.2 },
            _ => Grading { base_elems: 8, fraction_elems: 0.8, fraction_length: 0.1 },
        }
    }

    /// Top face: loaded by pressure or prescribed displacement.
    fn top_face(self) -> Face {
        Face::new(1, if self.dim() == 2 { Side::High } else { Side::Low })
    }

    fn dirichlet(self) -> Vec<DirichletBc> {
        let mut bcs = if self.dim() == 2 {
            vec![DirichletBc::symmetry(Face::new(1, Side::Low), 0)]
        } else {
            vec![DirichletBc::symmetry(Face::new(2, Side::Low), 1), DirichletBc::symmetry(Face::new(2, Side::High), 0)]
        };
        if self == Scenario::Hertz2dLargeUy04 {
            bcs.push(DirichletBc::prescribed(self.top_face(), 1, -0.4));
        }
        bcs
    }

    fn plane(self) -> RigidPlane {
        let n = if self.dim() == 2 { [0.0, 1.0, 0.0] } else { [0.0, 0.0, 1.0] };
        RigidPlane::new(n, -self.radius()).expect("unit normal")
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL.into_iter().find(|sc| sc.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Scenario::ALL.iter().map(|s| s.name()).collect();
            Error::config("scenario", format!("unknown scenario `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

/// Graded base mesh: `fraction_elems` of `base_elems` spans packed into the
/// `fraction_length` band next to the contact zone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grading {
    pub base_elems: usize,
    pub fraction_elems: f64,
    pub fraction_length: f64,
}

/// Bisects every span `levels` times.
pub fn bisect(bps: &[f64], levels: usize) -> Vec<f64> {
    let mut out = bps.to_vec();
    for _ in 0..levels {
        let mut next = Vec::with_capacity(2 * out.len());
        for w in out.windows(2) {
            next.push(w[0]);
            next.push(0.5 * (w[0] + w[1]));
        }
        next.push(*out.last().unwrap());
        out = next;
    }
    out
}

/// Geometry of a scenario at degree `p` and refinement `level` of the
/// graded base mesh. Levels are nested.
pub fn scenario_mesh(scenario: Scenario, p: usize, grading: &Grading, level: usize) -> Result<NurbsPatch> {
    let g = grading;
    let radial = graded_knots(g.base_elems, g.fraction_elems, g.fraction_length, RefinedEnd::High)?;
    if scenario.dim() == 2 {
        let angular = graded_knots(g.base_elems, g.fraction_elems, g.fraction_length, RefinedEnd::Low)?;
        build_mesh(&make_quarter_disc(scenario.radius())?, p, &[bisect(&radial, level), bisect(&angular, level)])
    } else {
        let latitude = graded_knots(g.base_elems, g.fraction_elems, g.fraction_length, RefinedEnd::High)?;
        let n_long = (g.base_elems / 2).max(1);
        let longitude: Vec<f64> = (0..=n_long).map(|i| i as f64 / n_long as f64).collect();
        build_mesh(
            &make_octant_sphere(scenario.radius())?,
            p,
            &[bisect(&radial, level), bisect(&latitude, level), bisect(&longitude, level)],
        )
    }
}

/// Everything produced by one solve.
pub struct LevelSolution {
    pub level: usize,
    pub space: PrimalSpace,
    pub dual: DualSpace,
    pub proj: ProjectionData,
    pub params: AugmentedParams,
    pub state: SystemState,
    pub report: SolveReport,
    /// Largest element diameter.
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub p: usize,
    pub levels: usize,
    /// Augmentation scale; `None` uses `100 E`.
    pub r0: Option<f64>,
    pub grading: Option<Grading>,
    pub newton: NewtonConfig,
}

impl BenchOptions {
    pub fn new(p: usize, levels: usize) -> Self {
        BenchOptions { p, levels, r0: None, grading: None, newton: NewtonConfig::default() }
    }
}

/// Solves a scenario on one mesh.
pub fn solve_level(scenario: Scenario, opts: &BenchOptions, level: usize) -> Result<LevelSolution> {
    let grading = opts.grading.unwrap_or_else(|| scenario.default_grading());
    let patch = scenario_mesh(scenario, opts.p, &grading, level)?;
    let space = build_primal(&patch, &scenario.dirichlet())?;
    let dual = build_dual(&patch, CONTACT_FACE)?;
    let n_quad = default_quadrature(&space);
    let proj = build_projection(&space, &dual, &scenario.plane(), n_quad)?;
    let material = scenario.material();
    let r0 = opts.r0.unwrap_or(100.0 * material.young);
    let params = AugmentedParams::new(r0, patch.face_mesh_size(CONTACT_FACE)?)?;
    let f_ext = match scenario.pressure() {
        Some(p) => assemble_neumann_pressure(&space, scenario.top_face(), p, n_quad)?,
        None => vec![0.0; space.n_dofs()],
    };
    let problem = ContactProblem { space: &space, proj: &proj, material, params, f_ext, n_quad };
    let (state, report) = match material.model {
        crate::elasticity::Model::Linear => solve_linear_contact(&problem, &opts.newton)?,
        crate::elasticity::Model::NeoHookean => solve_nonlinear_contact(&problem, &opts.newton)?,
    };
    let h = patch.mesh_size()?;
    Ok(LevelSolution { level, space, dual, proj, params, state, report, h })
}

impl LevelSolution {
    /// Multiplier field at a face-parametric point.
    pub fn multiplier_at(&self, t: &[f64]) -> Result<f64> {
        Ok(self.dual.eval(t)?.iter().map(|(k, b)| b * self.state.lambda[*k]).sum())
    }

    pub fn patch(&self) -> &NurbsPatch {
        self.space.patch()
    }
}

/// Errors of one mesh against the reference and the analytical solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub h: f64,
    pub l2_disp: f64,
    pub h1_disp: f64,
    /// `NaN` when no analytical pressure is known.
    pub l2_mult_analytical: f64,
    pub l2_mult_refined: f64,
}

/// Horizontal distance from the first contact point (on the symmetry axis).
fn radial_distance(x: &[f64; 3], dim: usize) -> f64 {
    if dim == 2 {
        x[0].abs()
    } else {
        (x[0] * x[0] + x[1] * x[1]).sqrt()
    }
}

/// Error norms of `coarse` against `reference`, integrated element by
/// element on the reference mesh so that both fields are smooth on every
/// integration cell. The two solutions must share the parameterisation.
pub fn error_norms(coarse: &LevelSolution, reference: &LevelSolution, hertz: Option<&HertzAnalytic>) -> Result<ErrorReport> {
    let (pc, pr) = (coarse.patch(), reference.patch());
    if pc.dim() != pr.dim() || pc.breakpoints().iter().zip(pr.breakpoints()).any(|(c, r)| c.iter().any(|b| !r.contains(b))) {
        return Err(Error::InvalidInput("reference mesh is not a refinement of the coarse mesh".into()));
    }
    let dim = pc.dim();
    let nq = (0..dim).map(|d| pr.degree(d)).max().unwrap() + 3;
    let rule = gauss_rule(&pr.breakpoints(), nq);
    let parts: Vec<(f64, f64)> = rule
        .elements
        .par_iter()
        .map(|e| -> Result<(f64, f64)> {
            let (mut l2, mut h1) = (0.0, 0.0);
            for (xi, w) in e.points.iter().zip(&e.weights) {
                let det = pr.eval_map(xi)?.det;
                let (vc, gc) = coarse.space.eval_field(&coarse.state.u, xi)?;
                let (vr, gr) = reference.space.eval_field(&reference.state.u, xi)?;
                for i in 0..dim {
                    l2 += w * det * (vc[i] - vr[i]).powi(2);
                    for j in 0..dim {
                        h1 += w * det * (gc[i][j] - gr[i][j]).powi(2);
                    }
                }
            }
            Ok((l2, h1))
        })
        .collect::<Result<_>>()?;
    let (l2, h1) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));

    let frule = face_rule(pr, CONTACT_FACE, nq)?;
    let (mut ma, mut mr) = (0.0, 0.0);
    for e in &frule.elements {
        for (t, w) in e.points.iter().zip(&e.weights) {
            let fr = pr.boundary_frame(CONTACT_FACE, t)?;
            let lc = coarse.multiplier_at(t)?;
            let lr = reference.multiplier_at(t)?;
            mr += w * fr.measure * (lc - lr).powi(2);
            if let Some(hz) = hertz {
                let la = -hz.pressure_at(radial_distance(&fr.x, dim));
                ma += w * fr.measure * (lc - la).powi(2);
            }
        }
    }
    Ok(ErrorReport {
        h: coarse.h,
        l2_disp: l2.sqrt(),
        h1_disp: h1.sqrt(),
        l2_mult_analytical: if hertz.is_some() { ma.sqrt() } else { f64::NAN },
        l2_mult_refined: mr.sqrt(),
    })
}

/// Least-squares slope of `log e` against `log h`. Pairs with a zero or
/// non-finite error are skipped.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> =
        pairs.iter().filter(|(h, e)| *h > 0.0 && *e > 0.0 && e.is_finite()).map(|(h, e)| (h.ln(), e.ln())).collect();
    if pts.len() < 2 {
        return Err(Error::InvalidInput(format!("rate fit needs two positive errors, got {}", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("rate fit needs distinct mesh sizes".into()));
    }
    Ok(sxy / sxx)
}

/// Fitted rates per error column; `None` where a fit is impossible.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rates {
    pub l2_disp: Option<f64>,
    pub h1_disp: Option<f64>,
    pub l2_mult_analytical: Option<f64>,
    pub l2_mult_refined: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTable {
    pub rows: Vec<ErrorReport>,
}

impl ConvergenceTable {
    pub fn rates(&self) -> Rates {
        let col = |f: fn(&ErrorReport) -> f64| {
            let pairs: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.h, f(r))).collect();
            fit_rate(&pairs).ok()
        };
        Rates {
            l2_disp: col(|r| r.l2_disp),
            h1_disp: col(|r| r.h1_disp),
            l2_mult_analytical: col(|r| r.l2_mult_analytical),
            l2_mult_refined: col(|r| r.l2_mult_refined),
        }
    }
}

/// Contact pressure at the multiplier control points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    /// Horizontal distance from the first contact point.
    pub r: f64,
    pub p_numeric: f64,
    pub p_analytic: f64,
}

/// Pressure `-lambda_K` at the Greville point of each multiplier function,
/// sorted by distance.
pub fn pressure_profile(sol: &LevelSolution, hertz: Option<&HertzAnalytic>) -> Result<Vec<ProfilePoint>> {
    let patch = sol.patch();
    let mut out = Vec::with_capacity(sol.dual.len());
    for (k, t) in sol.dual.greville().iter().enumerate() {
        let x = patch.point(&patch.face_point(CONTACT_FACE, t))?;
        let r = radial_distance(&x, patch.dim());
        let p_analytic = hertz.map_or(f64::NAN, |h| h.pressure_at(r));
        out.push(ProfilePoint { r, p_numeric: -sol.state.lambda[k], p_analytic });
    }
    out.sort_by(|a, b| a.r.total_cmp(&b.r));
    Ok(out)
}

/// Output of a convergence study.
pub struct BenchmarkResult {
    pub scenario: Scenario,
    pub hertz: Option<HertzAnalytic>,
    pub table: ConvergenceTable,
    /// Solutions of the reported levels, coarse to fine.
    pub levels: Vec<LevelSolution>,
    pub reference: LevelSolution,
    /// Pressure profile on the finest reported level.
    pub profile: Vec<ProfilePoint>,
}

/// Solves `levels` nested meshes and a reference two levels finer than the
/// finest one, then tabulates errors and rates.
pub fn run_benchmark(scenario: Scenario, opts: &BenchOptions) -> Result<BenchmarkResult> {
    if !(2..=3).contains(&opts.p) {
        return Err(Error::config("degree", format!("degree must be 2 or 3, got {}", opts.p)));
    }
    if opts.levels == 0 {
        return Err(Error::config("levels", "at least one level is required"));
    }
    let ref_level = opts.levels + 1;
    let mut sols: Vec<LevelSolution> =
        (0..=ref_level).into_par_iter().map(|l| solve_level(scenario, opts, l)).collect::<Result<_>>()?;
    let reference = sols.pop().unwrap();
    sols.truncate(opts.levels);
    let hertz = scenario.hertz();
    let rows = sols.iter().map(|s| error_norms(s, &reference, hertz.as_ref())).collect::<Result<Vec<_>>>()?;
    let profile = pressure_profile(sols.last().unwrap(), hertz.as_ref())?;
    Ok(BenchmarkResult { scenario, hertz, table: ConvergenceTable { rows }, levels: sols, reference, profile })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_names_roundtrip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!("hertz4d".parse::<Scenario>().is_err());
    }

    #[test]
    fn hertz_pressure_shape() {
        let h = hertz_solution(2, 1.0, 1.0, 0.3, 0.003).unwrap();
        assert_eq!(h.pressure_at(0.0), h.p0);
        assert_eq!(h.pressure_at(h.a), 0.0);
        assert_eq!(h.pressure_at(2.0 * h.a), 0.0);
        assert!(hertz_solution(4, 1.0, 1.0, 0.3, 0.003).is_err());
    }

    #[test]
    fn rate_fits() {
        assert!((fit_rate(&[(0.1, 0.01), (0.05, 0.0025)]).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(fit_rate(&[(0.1, 0.3), (0.05, 0.3)]).unwrap(), 0.0);
        assert!(fit_rate(&[(0.1, 0.0), (0.05, 0.1)]).is_err());
    }

    #[test]
    fn bisection() {
        assert_eq!(bisect(&[0.0, 0.5, 1.0], 1), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(bisect(&[0.0, 1.0], 0), vec![0.0, 1.0]);
    }
}
