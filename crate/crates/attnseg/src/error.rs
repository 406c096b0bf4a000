use std::io;
use std::path::{Path, PathBuf};

use attnseg_core::Error as CoreError;

/// Process exit codes used by the command-line tool.
pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 1;
    pub const INPUT: u8 = 2;
    pub const OUTPUT: u8 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {message}", path.display())]
    Image { path: PathBuf, message: String },
    #[error("cannot encode {}: {source}", path.display())]
    Encode { path: PathBuf, source: png::EncodingError },
    #[error("{0}")]
    Usage(String),
    #[error("{failed} of {total} dumps failed")]
    BatchFailures { failed: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn read(path: &Path, source: io::Error) -> Self {
        Self::Read { path: path.to_path_buf(), source }
    }

    pub(crate) fn write(path: &Path, source: io::Error) -> Self {
        Self::Write { path: path.to_path_buf(), source }
    }

    pub(crate) fn json(path: &Path, source: serde_json::Error) -> Self {
        Self::Json { path: path.to_path_buf(), source }
    }

    pub(crate) fn dump(path: &Path, message: impl std::fmt::Display) -> Self {
        Self::Core(CoreError::Dump(format!("{}: {message}", path.display())))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Usage(_) => exit::USAGE,
            Error::Core(CoreError::Encoding(_)) | Error::Write { .. } | Error::Encode { .. } => exit::OUTPUT,
            Error::Core(_) | Error::Read { .. } | Error::Json { .. } | Error::Image { .. } => exit::INPUT,
            Error::BatchFailures { .. } => exit::INPUT,
        }
    }
}
