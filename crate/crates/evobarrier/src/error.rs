use std::path::PathBuf;

use serde::Serialize;

/// Failures of the command-line layer.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error("malformed JSON in {}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("invalid model file: {0}")]
    ModelFile(String),
    #[error("{0}")]
    Flags(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] evobarrier_core::Error),
}

impl CliError {
    /// Stable short name used in the error record.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::FileNotFound(_) => "file not found",
            CliError::Read { .. } => "read error",
            CliError::Write { .. } | CliError::Csv(_) => "write error",
            CliError::Json { .. } => "malformed json",
            CliError::ModelFile(_) => "invalid model file",
            CliError::Flags(_) => "invalid flags",
            CliError::Core(_) => "analysis error",
        }
    }

    /// Single-line JSON record for stderr.
    pub fn record(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            error: &'a str,
            message: String,
        }
        serde_json::to_string(&Record { error: self.kind(), message: self.to_string() })
            .expect("error record serializes")
    }

    pub(crate) fn read(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            CliError::FileNotFound(path)
        } else {
            CliError::Read { path, source }
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
