use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("capacity exceeded: {what} = {value} (limit {limit})")]
    Capacity {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("energy table cannot be evaluated at s = {0}")]
    Interpolation(f64),

    #[error("division by zero: {0}")]
    Division(&'static str),

    #[error("integrator failure: {0}")]
    IntegratorFailure(String),

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("sample deviation undefined for {0} shots")]
    UndefinedDeviation(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable name of the error class, used in sweep failure records.
    pub fn class(&self) -> &'static str {
        match self {
            Error::InvalidLattice(_) => "invalid-lattice",
            Error::Parse { .. } => "parse",
            Error::Domain(_) => "domain",
            Error::Capacity { .. } => "capacity",
            Error::Interpolation(_) => "interpolation",
            Error::Division(_) => "division",
            Error::IntegratorFailure(_) => "integrator-failure",
            Error::InsufficientData { .. } => "insufficient-data",
            Error::UndefinedDeviation(_) => "undefined-deviation",
            Error::Config(_) => "config",
            Error::Precondition(_) => "precondition",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
