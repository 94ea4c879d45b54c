use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    InvalidArgument(String),

    #[error("index {index} out of range (len {len})")]
    Index { index: usize, len: usize },

    #[error("{0}")]
    Domain(String),

    #[error("{0}")]
    Validation(String),

    #[error("empty band: l_st={l_st} > l_en={l_en}")]
    EmptyBand { l_st: usize, l_en: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
}

impl Error {
    /// Short stable tag used by the command-line error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Index { .. } => "index",
            Error::Domain(_) => "domain",
            Error::Validation(_) => "validation",
            Error::EmptyBand { .. } => "empty-band",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
