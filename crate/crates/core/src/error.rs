use std::path::PathBuf;

use crate::solver::ModeState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid stratification: {0}")]
    Stratification(String),

    #[error("invalid mode list: {0}")]
    ModeList(String),

    #[error("mode lists differ: expected {expected:?}, found {found:?}")]
    ModeMismatch { expected: Vec<u32>, found: Vec<u32> },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error(
        "coefficient paths disagree at (n={n}, m={m}, k={k}): quadrature {quadrature:e}, closed form {closed_form:e}"
    )]
    CoefficientInconsistency {
        n: u32,
        m: u32,
        k: u32,
        quadrature: f64,
        closed_form: f64,
    },

    /// The integrator produced a non-finite value; `last_finite` is the
    /// state at the last completed step.
    #[error("non-finite value at step {step} (t = {time:e})")]
    NonFinite {
        step: u64,
        time: f64,
        last_finite: Box<ModeState>,
    },

    #[error("configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed data: {reason}")]
    Parse { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
