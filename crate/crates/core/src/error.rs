use thiserror::Error;

/// Errors raised by the geometry, spectral, and solver layers.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("assumption 1 violated: {0}")]
    GradientTooSmall(String),

    #[error("assumption 2 violated: {0}")]
    InjectivityFailure(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("point outside tubular neighborhood: {0}")]
    OutsideTube(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numerical blowup at step {step}: {detail}")]
    Blowup { step: usize, detail: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
