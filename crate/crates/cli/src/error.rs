use std::path::PathBuf;

use onh_core::Error as CoreError;

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const MISSING_ARTIFACT: i32 = 3;
    pub const NUMERIC: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("missing artifact: {} ({hint})", path.display())]
    MissingArtifact { path: PathBuf, hint: String },

    #[error("stale artifact: {} was produced by a different configuration; rerun `{stage}`", path.display())]
    StaleArtifact { path: PathBuf, stage: String },

    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::MissingArtifact { .. } | CliError::StaleArtifact { .. } => exit::MISSING_ARTIFACT,
            CliError::Core(CoreError::Io { source, .. }) if source.kind() == std::io::ErrorKind::NotFound => {
                exit::MISSING_ARTIFACT
            }
            CliError::Core(CoreError::Format { .. }) => exit::MISSING_ARTIFACT,
            CliError::Core(_) => exit::NUMERIC,
        }
    }
}

/// Map a core read error on an upstream artifact to a message naming the file
/// and the stage that produces it.
pub fn upstream(err: CoreError, stage: &str) -> CliError {
    match err {
        CoreError::Io { path, source } if source.kind() == std::io::ErrorKind::NotFound => {
            CliError::MissingArtifact { path, hint: format!("run `{stage}` first") }
        }
        other => CliError::Core(other),
    }
}
