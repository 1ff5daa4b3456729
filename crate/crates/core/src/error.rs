use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("histogram has no bins")]
    EmptyHistogram,

    #[error("invalid count {value} at bin {bin}: counts must be finite and non-negative")]
    InvalidCount { bin: usize, value: f64 },

    /// The frame carries no usable signal after offset removal.
    #[error("degenerate signal: L1 norm {norm:e} is below {threshold:e}")]
    DegenerateSignal { norm: f64, threshold: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("joint-state dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("need at least {required} usable frames, got {available}")]
    InsufficientFrames { required: usize, available: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// True for the frame-level "no decision" outcome.
    pub fn is_degenerate_signal(&self) -> bool {
        matches!(self, Error::DegenerateSignal { .. })
    }
}
