use thiserror::Error;

/// Errors raised by graph construction and the walk/conductance machinery.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed caller input: out-of-range ids, loops, bad parameters.
    #[error("invalid input: {0}")]
    Input(String),
    /// The input is well formed but the requested quantity is undefined on it
    /// (disconnected graph, isolated vertex, empty set, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative routine hit its iteration cap before converging.
    #[error("iteration cap of {cap} reached in {what}")]
    Cap { what: &'static str, cap: usize },
    /// The request is refused because it would be infeasible at this size.
    #[error("refused: {0}")]
    Refused(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
