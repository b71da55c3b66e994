use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scalar or size argument is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// Matrix or vector shapes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The operation requires a structural property the input lacks.
    #[error("contract violated: {0}")]
    Contract(String),

    #[error("eigensolver did not converge for a {n}x{n} matrix after {max_iter} iterations")]
    NoConvergence { n: usize, max_iter: usize },

    /// State became NaN or infinite during integration.
    #[error("non-finite state at step {step} (node {node})")]
    Divergence { step: usize, node: usize },

    /// Renormalization to unit modulus hit a (near) zero entry.
    #[error("degenerate complex state at node {node}: |y| = {modulus:e}")]
    Degenerate { node: usize, modulus: f64 },

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("invalid network at line {line}: {reason}")]
    Validation { line: usize, reason: String },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}
