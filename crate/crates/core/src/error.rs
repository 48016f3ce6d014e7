use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("frame format error: {0}")]
    FrameFormat(String),

    #[error("cannot demap the zero sample: nearest constellation point is ambiguous")]
    DemapAmbiguity,

    #[error("invalid channel scenario: {0}")]
    Scenario(String),

    #[error("CFR estimation failed at frame {frame_index}: {reason}")]
    Estimation { frame_index: u64, reason: String },

    #[error("invalid filter spec: {0}")]
    FilterSpec(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("degenerate training data: {0}")]
    DegenerateData(String),

    #[error("boosting failed: {0}")]
    BoostingFailure(String),

    #[error("training diverged at iteration {iteration}: loss = {loss}")]
    Divergence { iteration: usize, loss: f64 },

    #[error("input error: {0}")]
    Input(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("data error at line {line}: {message}")]
    Data { line: u64, message: String },

    #[error("unsupported schema version {found} (expected {expected})")]
    Version { found: u64, expected: u64 },

    #[error("schema error: missing required key `{0}`")]
    Schema(String),

    #[error("hash mismatch for {}: expected {expected}, found {found}", path.display())]
    HashMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
