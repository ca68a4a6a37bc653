use std::path::PathBuf;

use thiserror::Error;

use crate::solver::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter {value} lies outside the knot range [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("invalid knot vector: {0}")]
    InvalidKnotVector(String),

    #[error("unsupported degree {degree}: {reason}")]
    UnsupportedDegree { degree: usize, reason: &'static str },

    #[error("degenerate geometry at parametric point {xi:?} (det J = {det:e})")]
    DegenerateGeometry { xi: Vec<f64>, det: f64 },

    #[error("face (direction {dir}) does not exist on a {dim}-dimensional patch")]
    InvalidFace { dir: usize, dim: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-physical state: det F = {det_f:e} at parametric point {xi:?}")]
    NonPhysicalState { xi: Vec<f64>, det_f: f64 },

    #[error("singular linear system: first non-finite solution entry is {dof_class} (index {index})")]
    SingularSystem { index: usize, dof_class: String },

    #[error("linear solve inaccurate: relative residual {residual:e}")]
    InaccurateSolve { residual: f64 },

    #[error("Newton solver did not converge after {} iterations (last residual {:e})",
        .report.total_iterations(), .report.last_residual())]
    NonConvergence { report: Box<SolveReport> },

    #[error("configuration error in field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("I/O error at {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: message.into() }
    }
}
