//! CSV tables and legacy VTK snapshots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{ConvergenceTable, HertzAnalytic, LevelSolution, ProfilePoint};
use crate::elasticity::{eval_stress, Material};
use crate::error::{Error, Result};
use crate::splines::advance;

fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.12e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// `convergence.csv`: one row per level and, when rows exist, a footer
/// row with the fitted rates.
pub fn convergence_csv(table: &ConvergenceTable) -> String {
    let mut s = String::from("level,h,l2_disp,h1_disp,l2_mult_analytical,l2_mult_refined\n");
    for (i, r) in table.rows.iter().enumerate() {
        let _ = writeln!(
            s,
            "{i},{},{},{},{},{}",
            num(r.h),
            num(r.l2_disp),
            num(r.h1_disp),
            num(r.l2_mult_analytical),
            num(r.l2_mult_refined)
        );
    }
    if !table.rows.is_empty() {
        let rt = table.rates();
        let _ = writeln!(
            s,
            "rate,,{},{},{},{}",
            opt(rt.l2_disp),
            opt(rt.h1_disp),
            opt(rt.l2_mult_analytical),
            opt(rt.l2_mult_refined)
        );
    }
    s
}

/// `pressure_profile.csv`, normalised by the Hertz half-width and peak
/// pressure when they are known.
pub fn profile_csv(profile: &[ProfilePoint], hertz: Option<&HertzAnalytic>) -> String {
    let mut s = String::new();
    match hertz {
        Some(h) => {
            s.push_str("r_over_a,p_over_p0_numeric,p_over_p0_analytic\n");
            for p in profile {
                let _ = writeln!(s, "{},{},{}", num(p.r / h.a), num(p.p_numeric / h.p0), num(p.p_analytic / h.p0));
            }
        }
        None => {
            s.push_str("r,p_numeric\n");
            for p in profile {
                let _ = writeln!(s, "{},{}", num(p.r), num(p.p_numeric));
            }
        }
    }
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Legacy ASCII VTK unstructured grid with displacement and stress norm,
/// sampled on a `samples`-point lattice per element and direction.
pub fn vtk_snapshot(sol: &LevelSolution, material: &Material, samples: usize) -> Result<String> {
    let patch = sol.patch();
    let dim = patch.dim();
    let s = samples.max(2);
    let bps = patch.breakpoints();
    let counts: Vec<usize> = bps.iter().map(|b| b.len() - 1).collect();
    let n_elems: usize = counts.iter().product();
    let per_elem = s.pow(dim as u32);
    let mut pts = Vec::with_capacity(n_elems * per_elem);
    let mut disp = Vec::with_capacity(n_elems * per_elem);
    let mut stress = Vec::with_capacity(n_elems * per_elem);
    let mut cells: Vec<Vec<usize>> = Vec::new();
    let mut eidx = vec![0usize; dim];
    for _ in 0..n_elems {
        let base = pts.len();
        let mut loc = vec![0usize; dim];
        for _ in 0..per_elem {
            let xi: Vec<f64> = (0..dim)
                .map(|d| {
                    let (a, b) = (bps[d][eidx[d]], bps[d][eidx[d] + 1]);
                    a + (b - a) * loc[d] as f64 / (s - 1) as f64
                })
                .collect();
            pts.push(patch.point(&xi)?);
            disp.push(sol.space.eval_value(&sol.state.u, &xi)?);
            // nudge off collapsed edges where the map is singular
            let inner: Vec<f64> = xi.iter().map(|v| v.clamp(1e-9, 1.0 - 1e-9)).collect();
            let sig = eval_stress(&sol.space, material, &sol.state.u, &inner)
                .map(|m| m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt())
                .unwrap_or(f64::NAN);
            stress.push(sig);
            advance(&mut loc, &vec![s; dim]);
        }
        let id = |l: &[usize]| base + l.iter().rev().fold(0, |acc, &i| acc * s + i);
        let mut c = vec![0usize; dim];
        for _ in 0..(s - 1).pow(dim as u32) {
            let corner = |o: &[usize]| -> usize {
                let l: Vec<usize> = c.iter().zip(o).map(|(a, b)| a + b).collect();
                id(&l)
            };
            if dim == 2 {
                cells.push(vec![corner(&[0, 0]), corner(&[1, 0]), corner(&[1, 1]), corner(&[0, 1])]);
            } else {
                cells.push(vec![
                    corner(&[0, 0, 0]),
                    corner(&[1, 0, 0]),
                    corner(&[1, 1, 0]),
                    corner(&[0, 1, 0]),
                    corner(&[0, 0, 1]),
                    corner(&[1, 0, 1]),
                    corner(&[1, 1, 1]),
                    corner(&[0, 1, 1]),
                ]);
            }
            advance(&mut c, &vec![s - 1; dim]);
        }
        advance(&mut eidx, &counts);
    }
    let mut out = String::from("# vtk DataFile Version 3.0\ncontact solution\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {} double", pts.len());
    for p in &pts {
        let _ = writeln!(out, "{} {} {}", num(p[0]), num(p[1]), num(p[2]));
    }
    let nv = if dim == 2 { 4 } else { 8 };
    let _ = writeln!(out, "CELLS {} {}", cells.len(), cells.len() * (nv + 1));
    for c in &cells {
        let ids: Vec<String> = c.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "{nv} {}", ids.join(" "));
    }
    let _ = writeln!(out, "CELL_TYPES {}", cells.len());
    let ty = if dim == 2 { 9 } else { 12 };
    for _ in &cells {
        let _ = writeln!(out, "{ty}");
    }
    let _ = writeln!(out, "POINT_DATA {}\nVECTORS displacement double", pts.len());
    for d in &disp {
        let _ = writeln!(out, "{} {} {}", num(d[0]), num(d[1]), num(d[2]));
    }
    out.push_str("SCALARS stress_norm double 1\nLOOKUP_TABLE default\n");
    for v in &stress {
        let _ = writeln!(out, "{}", num(*v));
    }
    Ok(out)
}
