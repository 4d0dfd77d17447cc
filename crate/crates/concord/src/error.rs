use std::path::PathBuf;

/// Failures of the command-line layer. Input problems (unreadable or
/// malformed files, bad options) exit with 2, analysis failures with 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: concord_core::Error },
    #[error("analysis failed: {0}")]
    Analysis(#[from] concord_core::Error),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Analysis(_) | Self::Write { .. } => 1,
            Self::Read { .. } | Self::Parse { .. } | Self::Config(_) | Self::Input { .. } => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
