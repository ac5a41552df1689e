use std::io;
use std::path::{Path, PathBuf};

use sweetspot_core::corpus::CorpusError;
use sweetspot_core::train::TrainError;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const CONFIG: u8 = 2;
    pub const DATA: u8 = 3;
    pub const VERIFY: u8 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error("missing input: {}", .0.display())]
    MissingInput(PathBuf),
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("verification failed: {0}")]
    Verify(String),
}

impl LabError {
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Config(_) | LabError::MissingInput(_) => exit::CONFIG,
            LabError::Corpus(CorpusError::InvalidScoring(_) | CorpusError::InvalidTask(_)) => exit::CONFIG,
            LabError::Train(TrainError::InvalidConfig(_)) => exit::CONFIG,
            LabError::Corpus(_) | LabError::Data(_) | LabError::Train(_) | LabError::Io { .. } => exit::DATA,
            LabError::Verify(_) => exit::VERIFY,
        }
    }

    pub fn io(path: impl AsRef<Path>) -> impl FnOnce(io::Error) -> LabError {
        let path = path.as_ref().to_path_buf();
        move |source| LabError::Io { path, source }
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
