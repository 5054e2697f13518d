use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("{}: {malformed} of {total} lines malformed (limit {limit_percent}%), first at lines {lines:?}", path.display())]
    Malformed {
        path: PathBuf,
        malformed: usize,
        total: usize,
        limit_percent: f64,
        lines: Vec<u64>,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("unknown user id {0:?}")]
    UnknownUser(String),
    #[error(transparent)]
    Core(#[from] jova_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
