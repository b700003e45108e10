use thiserror::Error;

use crate::cltlab::McReport;
use crate::quad::QuadResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structurally invalid configuration (wrong component count, bad method/grid pairing, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Factorization failure, non-finite Monte Carlo sample, negative embedding eigenvalue.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A deterministic rule ran out of evaluations before reaching the requested tolerance.
    #[error("convergence error: {message} (best estimate {:e} ± {:e})", best.value, best.error_estimate)]
    Convergence { message: String, best: QuadResult },

    /// An experiment hit its resource budget; the report holds every completed `k`.
    #[error("partial report: {message}")]
    PartialReport { message: String, report: Box<McReport> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-friendly name of the error class.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Config(_) => "configuration",
            Error::Numerical(_) => "numerical",
            Error::Convergence { .. } => "convergence",
            Error::PartialReport { .. } => "partial-report",
            Error::Io(_) => "io",
        }
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
