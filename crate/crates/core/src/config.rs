//! Run configuration for the command-line tool.
//!
//! The file format is one `key = value` pair per line; `#` starts a comment.
//! Values are resolved in three layers: built-in defaults, then the file,
//! then command-line overrides. Defaults that depend on the scenario (grading
//! and `r0`) are filled in after the scenario itself is known.
//!
//! | key              | default                         |
//! |------------------|---------------------------------|
//! | `scenario`       | required                        |
//! | `degree`         | 2                               |
//! | `levels`         | 3                               |
//! | `r0`             | 100 E of the scenario material  |
//! | `rtol`, `atol`   | 1e-10, 1e-12                    |
//! | `max_iter`       | 50                              |
//! | `load_steps`     | 10                              |
//! | `max_cuts`       | 5                               |
//! | `cut_factor`     | 0.5                             |
//! | `base_elems`     | 8 (2D) or 4 (3D)                |
//! | `fraction_elems` | 0.8 (2D) or 0.75 (3D)           |
//! | `fraction_length`| 0.2 (hertz2d_p01) or 0.1         |
//! | `out`            | `out`                           |
//! | `threads`        | 0 (all cores)                   |
//! | `vtk`            | false                           |
//! | `vtk_samples`    | 4                               |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::bench::output::{convergence_csv, profile_csv, vtk_snapshot, write_file};
use crate::bench::{run_benchmark, BenchOptions, BenchmarkResult, Grading, Scenario};
use crate::error::{Error, Result};
use crate::solver::NewtonConfig;

/// Every key the file format accepts, in emission order.
pub const KEYS: [&str; 17] = [
    "scenario",
    "degree",
    "levels",
    "r0",
    "rtol",
    "atol",
    "max_iter",
    "load_steps",
    "max_cuts",
    "cut_factor",
    "base_elems",
    "fraction_elems",
    "fraction_length",
    "out",
    "threads",
    "vtk",
    "vtk_samples",
];

/// Name of the resolved configuration echoed next to the results.
pub const RESOLVED_FILE: &str = "resolved.cfg";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub p: usize,
    pub levels: usize,
    pub r0: f64,
    pub newton: NewtonConfig,
    pub grading: Grading,
    pub out: PathBuf,
    /// Worker threads; 0 lets the thread pool decide.
    pub threads: usize,
    pub vtk: bool,
    /// Visualization lattice points per element and direction.
    pub vtk_samples: usize,
}

fn value<T: FromStr>(pairs: &BTreeMap<String, String>, key: &str, default: T) -> Result<T> {
    match pairs.get(key) {
        None => Ok(default),
        Some(s) => s.parse().map_err(|_| Error::config(key, format!("cannot parse `{s}`"))),
    }
}

/// Splits `key = value` lines; later lines win over earlier ones.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut pairs = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}", n + 1), format!("expected `key = value`, got `{line}`")))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(Error::config(k, "unknown key"));
        }
        pairs.insert(k.to_string(), v.trim().to_string());
    }
    Ok(pairs)
}

impl RunConfig {
    /// Resolves a configuration from file text and overrides applied on top.
    pub fn parse_with(text: &str, overrides: &[(&str, String)]) -> Result<Self> {
        let mut pairs = parse_pairs(text)?;
        for (k, v) in overrides {
            if !KEYS.contains(k) {
                return Err(Error::config(*k, "unknown key"));
            }
            pairs.insert(k.to_string(), v.clone());
        }
        Self::from_pairs(&pairs)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with(text, &[])
    }

    pub fn from_file(path: &Path, overrides: &[(&str, String)]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_with(&text, overrides)
    }

    fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let scenario: Scenario =
            pairs.get("scenario").ok_or_else(|| Error::config("scenario", "missing"))?.parse()?;
        let nd = NewtonConfig::default();
        let gd = scenario.default_grading();
        let cfg = RunConfig {
            scenario,
            p: value(pairs, "degree", 2)?,
            levels: value(pairs, "levels", 3)?,
            r0: value(pairs, "r0", 100.0 * scenario.material().young)?,
            newton: NewtonConfig {
                rtol: value(pairs, "rtol", nd.rtol)?,
                atol: value(pairs, "atol", nd.atol)?,
                max_iter: value(pairs, "max_iter", nd.max_iter)?,
                load_steps: value(pairs, "load_steps", nd.load_steps)?,
                max_cuts: value(pairs, "max_cuts", nd.max_cuts)?,
                cut_factor: value(pairs, "cut_factor", nd.cut_factor)?,
            },
            grading: Grading {
                base_elems: value(pairs, "base_elems", gd.base_elems)?,
                fraction_elems: value(pairs, "fraction_elems", gd.fraction_elems)?,
                fraction_length: value(pairs, "fraction_length", gd.fraction_length)?,
            },
            out: PathBuf::from(value(pairs, "out", "out".to_string())?),
            threads: value(pairs, "threads", 0)?,
            vtk: value(pairs, "vtk", false)?,
            vtk_samples: value(pairs, "vtk_samples", 4)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.p) {
            return Err(Error::config("degree", format!("must be 2 or 3, got {}", self.p)));
        }
        if !(1..=8).contains(&self.levels) {
            return Err(Error::config("levels", format!("must lie in 1..=8, got {}", self.levels)));
        }
        if !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(Error::config("r0", format!("must be positive, got {}", self.r0)));
        }
        self.newton.validate()?;
        let g = &self.grading;
        if g.base_elems < 2 {
            return Err(Error::config("base_elems", format!("need at least 2, got {}", g.base_elems)));
        }
        if !(g.fraction_elems > 0.0 && g.fraction_elems < 1.0) {
            return Err(Error::config("fraction_elems", format!("must lie in (0, 1), got {}", g.fraction_elems)));
        }
        if !(g.fraction_length > 0.0 && g.fraction_length < 1.0) {
            return Err(Error::config("fraction_length", format!("must lie in (0, 1), got {}", g.fraction_length)));
        }
        let k = (g.fraction_elems * g.base_elems as f64).round() as usize;
        if k < 1 || k >= g.base_elems {
            return Err(Error::config(
                "fraction_elems",
                format!("{k} of {} spans in the band; need at least one on each side", g.base_elems),
            ));
        }
        if self.vtk_samples < 2 {
            return Err(Error::config("vtk_samples", "need at least 2"));
        }
        Ok(())
    }

    /// Fully resolved configuration in the file format.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let n = &self.newton;
        let g = &self.grading;
        let _ = writeln!(s, "scenario = {}", self.scenario);
        let _ = writeln!(s, "degree = {}", self.p);
        let _ = writeln!(s, "levels = {}", self.levels);
        let _ = writeln!(s, "r0 = {}", self.r0);
        let _ = writeln!(s, "rtol = {}", n.rtol);
        let _ = writeln!(s, "atol = {}", n.atol);
        let _ = writeln!(s, "max_iter = {}", n.max_iter);
        let _ = writeln!(s, "load_steps = {}", n.load_steps);
        let _ = writeln!(s, "max_cuts = {}", n.max_cuts);
        let _ = writeln!(s, "cut_factor = {}", n.cut_factor);
        let _ = writeln!(s, "base_elems = {}", g.base_elems);
        let _ = writeln!(s, "fraction_elems = {}", g.fraction_elems);
        let _ = writeln!(s, "fraction_length = {}", g.fraction_length);
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(s, "threads = {}", self.threads);
        let _ = writeln!(s, "vtk = {}", self.vtk);
        let _ = writeln!(s, "vtk_samples = {}", self.vtk_samples);
        s
    }

    pub fn bench_options(&self) -> BenchOptions {
        BenchOptions {
            p: self.p,
            levels: self.levels,
            r0: Some(self.r0),
            grading: Some(self.grading),
            newton: self.newton.clone(),
        }
    }
}

/// Runs the configured study on its own thread pool and writes
/// `convergence.csv`, `pressure_profile.csv`, the resolved configuration and,
/// if requested, a VTK snapshot of the finest level into `cfg.out`.
pub fn execute(cfg: &RunConfig) -> Result<BenchmarkResult> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    let result = pool.install(|| run_benchmark(cfg.scenario, &cfg.bench_options()))?;
    emit_outputs(cfg, &result)?;
    Ok(result)
}

pub fn emit_outputs(cfg: &RunConfig, result: &BenchmarkResult) -> Result<()> {
    let dir = &cfg.out;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("convergence.csv"), &convergence_csv(&result.table))?;
    write_file(&dir.join("pressure_profile.csv"), &profile_csv(&result.profile, result.hertz.as_ref()))?;
    write_file(&dir.join(RESOLVED_FILE), &cfg.emit())?;
    if cfg.vtk {
        let finest = result.levels.last().expect("at least one level");
        let vtk = vtk_snapshot(finest, &result.scenario.material(), cfg.vtk_samples)?;
        write_file(&dir.join("solution.vtk"), &vtk)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let c = RunConfig::parse("scenario = hertz2d_p003\n").unwrap();
        assert_eq!(c.p, 2);
        assert_eq!(c.levels, 3);
        assert_eq!(c.r0, 100.0);
        assert_eq!(c.newton, NewtonConfig::default());
        assert_eq!(c.grading, Scenario::Hertz2dP003.default_grading());
        assert!(!c.vtk);
    }

    #[test]
    fn bad_degree_names_field() {
        let e = RunConfig::parse("scenario = hertz2d_p003\ndegree = 5").unwrap_err();
        assert!(matches!(&e, Error::Config { field, .. } if field == "degree"), "{e}");
    }

    #[test]
    fn override_wins() {
        let c = RunConfig::parse_with("scenario = hertz2d_p003\nr0 = 10 # file value", &[("r0", "50".into())]).unwrap();
        assert_eq!(c.r0, 50.0);
    }

    #[test]
    fn scenario_override_refreshes_defaults() {
        let c = RunConfig::parse_with("scenario = hertz2d_p003", &[("scenario", "hertz3d_p5e-4".into())]).unwrap();
        assert_eq!(c.grading.base_elems, 4);
    }

    #[test]
    fn malformed_input() {
        assert!(matches!(RunConfig::parse("scenario hertz2d_p003"), Err(Error::Config { .. })));
        assert!(matches!(RunConfig::parse("scenario = nope"), Err(Error::Config { field, .. }) if field == "scenario"));
        assert!(matches!(RunConfig::parse("degree = 2"), Err(Error::Config { field, .. }) if field == "scenario"));
        assert!(matches!(RunConfig::parse("scenario = hertz2d_p01\ncolour = red"), Err(Error::Config { field, .. }) if field == "colour"));
        assert!(matches!(RunConfig::parse("scenario = hertz2d_p01\nlevels = x"), Err(Error::Config { field, .. }) if field == "levels"));
    }

    #[test]
    fn emit_roundtrip() {
        let c = RunConfig::parse("scenario = hertz2d_large_uy04\ndegree = 3\nr0 = 0.1\nrtol = 3e-11\nvtk = true").unwrap();
        assert_eq!(RunConfig::parse(&c.emit()).unwrap(), c);
    }
}
