use thiserror::Error;

/// Errors surfaced by the segmentation pipeline.
#[derive(Debug, Error)]
pub enum SacError {
    /// Invalid configuration or argument values.
    #[error("config error: {0}")]
    Config(String),

    /// Dataset, annotation, or fixture problems.
    #[error("data error: {0}")]
    Data(String),

    /// A feature extractor or segmenter backend failed or is unavailable.
    #[error("backend error: {0}")]
    Backend(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SacError>;
