use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Sobol dimension {requested} unsupported (table holds {available})")]
    UnsupportedDimension { requested: usize, available: usize },

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("all particle weights degenerate at iteration {iteration}")]
    Degenerate { iteration: usize },

    #[error("ChEES adaptation never ran before the warm-up freeze")]
    AdaptationNeverRan,

    #[error("AUROC undefined: evaluation split contains a single class")]
    SingleClass,

    #[error("usage: {0}")]
    Usage(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
