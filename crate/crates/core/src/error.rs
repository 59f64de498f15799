use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
///
/// An unbounded quadratic is *not* an error; it is reported through
/// [`crate::solver::SolveStatus::Unbounded`].
#[derive(Debug, Error)]
pub enum QpError {
    /// A precondition of the called operation does not hold.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The operation is not available for this backend or input size.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A value was requested from a problem that is unbounded below.
    #[error("unbounded: {0}")]
    Unbounded(String),

    /// A problem or sample file could not be parsed.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, QpError>;

pub(crate) fn contract(msg: impl Into<String>) -> QpError {
    QpError::Contract(msg.into())
}

pub(crate) fn ensure_finite(what: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(contract(format!("{what}[{i}] is not finite"))),
        None => Ok(()),
    }
}
