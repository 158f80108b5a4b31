use std::io;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    /// Malformed scenario document. `message` carries the parser's line and
    /// column when it has them.
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },

    /// A well-formed value outside the domain of the section that owns it.
    #[error("{origin}: [{section}] {source}")]
    Domain { origin: String, section: &'static str, source: bfsmc_core::Error },

    /// Malformed trace file.
    #[error("{origin}: line {line}: {message}")]
    Trace { origin: String, line: usize, message: String },

    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
