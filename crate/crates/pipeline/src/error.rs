use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, PipelineError>;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Core(#[from] acousmap_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("png encoding: {0}")]
    Png(#[from] png::EncodingError),

    #[error("config: {0}")]
    Config(String),

    #[error("no manifest in {0}; run `acousmap gen-scenes` first")]
    NoManifest(PathBuf),

    #[error("stage `{stage}` needs the outputs of `{upstream}`; run `acousmap {upstream}` first")]
    MissingUpstream { stage: &'static str, upstream: &'static str },

    #[error("outputs of `{upstream}` are stale for `{stage}`; rerun `acousmap {upstream}`")]
    StaleUpstream { stage: &'static str, upstream: &'static str },

    #[error("{path} is missing or changed since it was recorded; rerun the stage that wrote it")]
    Integrity { path: String },

    #[error("{0}")]
    Invalid(String),
}
