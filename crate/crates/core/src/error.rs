use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid impulse response: {0}")]
    InvalidRir(String),

    #[error("signal has no energy")]
    NoEnergy,

    #[error("band edge {edge_hz:.1} Hz is outside (0, {nyquist_hz:.1}) Hz")]
    BandOutOfRange { edge_hz: f64, nyquist_hz: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("mask has no valid pixels")]
    EmptyMask,

    #[error("no active pixels to pool from")]
    NoActivePixels,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("scene is {width:.2} x {depth:.2} m, larger than the {map_area:.2} m map")]
    SceneTooLarge { width: f64, depth: f64, map_area: f64 },

    #[error("scene generation failed: {0}")]
    SceneGeneration(String),

    #[error("position ({x:.3}, {y:.3}) is outside the scene")]
    OutsideScene { x: f64, y: f64 },

    #[error("mean absorption is zero, reverberation time is infinite")]
    ZeroAbsorption,

    #[error("source and receiver coincide")]
    ZeroDistance,

    #[error("tensor file {path}: {reason}")]
    TensorFormat { path: PathBuf, reason: String },

    #[error("missing keys: {0:?}")]
    MissingKeys(Vec<String>),

    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Wav(#[from] hound::Error),
}
