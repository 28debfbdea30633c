use std::path::PathBuf;

use crate::lp::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid score: {0}")]
    InvalidScore(String),

    #[error("invalid counts: {0}")]
    InvalidCounts(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("not adjustable under hypothesis: {0}")]
    NotAdjustable(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("missing data: {0}")]
    Missing(String),

    #[error(transparent)]
    Lp(#[from] LpError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Image { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
