use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("repository root {0} does not exist or is not a directory")]
    RootMissing(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("lookup failed: {0}")]
    Lookup(String),

    #[error("symbol kind not allowed here: {0}")]
    Kind(String),

    #[error("description leaks identifier {leaked:?} of {locator}")]
    Leakage { locator: String, leaked: String },

    #[error("template error: {0}")]
    Template(String),

    #[error("malformed patch at line {line}: {message}")]
    PatchFormat { line: usize, message: String },

    #[error("patch does not apply to {path}: {message}")]
    PatchApply { path: String, message: String },

    #[error("gold patch touches no file of the repository")]
    EmptyGroundTruth,

    #[error("candidate rejected: {0}")]
    Rejected(String),

    #[error("repository store: {0}")]
    Store(String),

    #[error("workspace integrity: {0}")]
    Integrity(String),

    #[error("workspace state: {0}")]
    State(String),

    #[error("record format: {0}")]
    Record(String),

    #[error("sampling spec: {0}")]
    Spec(String),

    #[error("execution adapter: {0}")]
    Exec(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
