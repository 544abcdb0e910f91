use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no sign change on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("degenerate input: {0}")]
    Rank(String),

    #[error("singular map (det = {0})")]
    Singular(f64),

    #[error("invalid body spec: field `{field}`: {msg}")]
    Spec { field: String, msg: String },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    // Not marked as a source: the message already carries it.
    #[error("{}: {err}", path.display())]
    Io { path: PathBuf, err: std::io::Error },

    #[error("{}: {err}", path.display())]
    Json { path: PathBuf, err: serde_json::Error },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
