use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid process spec: {0}")]
    InvalidSpec(String),

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite input")]
    NonFinite,

    #[error("process {0} cannot be sampled at unit time; use a dyadic path")]
    UnsupportedVariant(&'static str),

    #[error("decrement rejected: killed-process sketches are insertion-only")]
    DecrementRejected,

    #[error("sketch configs differ; refusing to merge")]
    ConfigMismatch,

    #[error("config hash mismatch: header says {stored:016x}, config hashes to {computed:016x}")]
    ConfigHashMismatch { stored: u64, computed: u64 },

    #[error("format error: {0}")]
    Format(String),

    #[error("estimation failed: {0}")]
    EstimationFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
