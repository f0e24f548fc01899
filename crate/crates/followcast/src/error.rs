use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// A specific line of an input file is unusable.
    #[error("{source_name}:{line}: {message}")]
    Line {
        source_name: String,
        line: u64,
        message: String,
    },
    #[error("{source_name}: {message}")]
    Format { source_name: String, message: String },
    #[error("{what}: {} does not exist", .path.display())]
    MissingInput { what: String, path: PathBuf },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] followcast_core::Error),
}

impl Error {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn format(source_name: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            source_name: source_name.into(),
            message: message.into(),
        }
    }

    pub fn line(source_name: impl Into<String>, line: u64, message: impl Into<String>) -> Self {
        Error::Line {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }
}
