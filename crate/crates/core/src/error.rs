use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A query exceeds what a precomputed structure covers, or a value overflows 64 bits.
    #[error("range error: {0}")]
    Range(String),

    #[error("resource error: {0}")]
    Resource(String),

    #[error("quadrature did not converge (achieved relative error {achieved:.3e}, wanted {wanted:.3e})")]
    Convergence { achieved: f64, wanted: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("pattern is inadmissible: offsets cover every residue class modulo {prime}")]
    Inadmissible { prime: u64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("usage error: {0}")]
    Usage(String),
}

impl Error {
    /// Usage errors are the caller's fault; everything else is a computation failure.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Usage(_))
    }
}
