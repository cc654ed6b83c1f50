use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("no labeled voxels")]
    EmptySegmentation,

    #[error("degenerate BMO ring")]
    DegenerateBmoRing,

    #[error("crop removed all points")]
    EmptyCrop,

    #[error("block exceeds volume")]
    BlockExceedsVolume,

    #[error("displacement of {magnitude:.3} voxels exceeds the warp bound of {bound} voxels")]
    DisplacementBound { magnitude: f64, bound: f64 },

    #[error("empty strain field")]
    EmptyStrainField,

    #[error("empty input cloud")]
    EmptyCloud,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("empty test set")]
    EmptyTestSet,

    #[error("training diverged at epoch {epoch}, batch {batch}: loss = {loss}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed file: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format { path: path.into(), reason: reason.into() }
    }
}
