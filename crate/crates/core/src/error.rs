use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("insufficient motion: no relative motion rotates by at least {threshold_deg:.1} deg")]
    InsufficientMotion { threshold_deg: f64 },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("inconsistent samples: spread {spread_mm:.3} mm exceeds {threshold_mm:.3} mm")]
    InconsistentSamples { spread_mm: f64, threshold_mm: f64 },

    #[error("no samples survive gating")]
    EmptyAfterGating,

    #[error("empty input")]
    EmptyInput,

    #[error("depth profile has no populated bins")]
    EmptyProfile,

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },

    #[error("line {line}: unknown frame label `{label}`")]
    Frame { line: u64, label: String },

    #[error("line {line}: timestamp {timestamp} does not increase")]
    NonMonotoneTime { line: u64, timestamp: f64 },

    #[error("json: {0}")]
    Json(String),
}

impl Error {
    /// Stable identifier used in machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegenerateConfiguration(_) => "DegenerateConfiguration",
            Error::InsufficientMotion { .. } => "InsufficientMotion",
            Error::InsufficientData { .. } => "InsufficientData",
            Error::InconsistentSamples { .. } => "InconsistentSamples",
            Error::EmptyAfterGating => "EmptyAfterGating",
            Error::EmptyInput => "EmptyInput",
            Error::EmptyProfile => "EmptyProfile",
            Error::InvalidPolicy(_) => "InvalidPolicy",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Parse { .. } => "ParseError",
            Error::Frame { .. } => "FrameError",
            Error::NonMonotoneTime { .. } => "NonMonotoneTime",
            Error::Json(_) => "JsonError",
        }
    }

    /// Line number for parse-type errors.
    pub fn line(&self) -> Option<u64> {
        match self {
            Error::Parse { line, .. } | Error::Frame { line, .. } | Error::NonMonotoneTime { line, .. } => {
                Some(*line)
            }
            _ => None,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
