//! Crate-wide error type.

use std::fmt;
use std::io;
use std::path::PathBuf;

/// Errors produced by mesh I/O, field construction, and training.
#[derive(Debug)]
pub enum Error {
    /// Underlying I/O failure, annotated with the path involved.
    Io { path: PathBuf, source: io::Error },
    /// A file did not parse under its stated format. `line` is 1-based for
    /// text formats and a byte offset for binary formats.
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    /// A mesh violated an invariant (empty, zero extent, bad indices, ...).
    InvalidMesh(String),
    /// A grid violated an invariant (non-finite values, bad dims, ...).
    InvalidGrid(String),
    /// A configuration is internally inconsistent.
    InvalidConfig(String),
    /// An operation produced NaN or Inf.
    NonFinite(String),
    /// Shapes of tensor operands do not match.
    ShapeMismatch(String),
    /// `Graph::backward` was called twice on the same recorded graph.
    GraphReuse,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Io { path, source } => write!(f, "{}: {}", path.display(), source),
            Error::Parse { path, line, msg } => {
                write!(f, "{}:{}: {}", path.display(), line, msg)
            }
            Error::InvalidMesh(msg) => write!(f, "invalid mesh: {}", msg),
            Error::InvalidGrid(msg) => write!(f, "invalid grid: {}", msg),
            Error::InvalidConfig(msg) => write!(f, "invalid config: {}", msg),
            Error::NonFinite(msg) => write!(f, "non-finite value: {}", msg),
            Error::ShapeMismatch(msg) => write!(f, "shape mismatch: {}", msg),
            Error::GraphReuse => write!(f, "backward called twice on the same graph"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
