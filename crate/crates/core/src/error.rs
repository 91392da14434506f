use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("camera CSV is missing required column '{0}'")]
    MissingColumn(String),
    #[error("camera CSV row {row}: cannot parse field '{field}' from '{value}'")]
    CsvParse {
        row: usize,
        field: String,
        value: String,
    },
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("view index {index} out of range (scene has {count} views)")]
    ViewIndex { index: usize, count: usize },
    #[error("invalid patch size {size} for {h}x{w} image")]
    PatchSize { size: usize, h: usize, w: usize },
    #[error("scene load failed: {0}")]
    SceneLoad(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("image error on {path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("orientation histogram has zero mass; no dominant direction")]
    NoDominantDirection,
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("checkpoint version mismatch: file has {found}, this build reads {expected}")]
    CheckpointVersion { found: u32, expected: u32 },
    #[error("training loss became non-finite at iteration {iter}; diagnostic checkpoint at {checkpoint:?}")]
    NonFiniteLoss {
        iter: usize,
        checkpoint: Option<PathBuf>,
    },
    #[error("ground truth missing: {0}")]
    MissingGroundTruth(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
