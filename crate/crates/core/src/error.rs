use thiserror::Error;

/// Errors produced anywhere in the bone-age pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Invariant(String),

    #[error("duplicate record for subject '{subject_id}' bone {bone}")]
    Duplicate { subject_id: String, bone: String },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("design matrix is rank deficient at column '{column}'")]
    RankDeficient { column: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Degenerate(_)
            | Error::RankDeficient { .. }
            | Error::Numeric(_)
            | Error::InsufficientData(_) => 4,
            Error::InvalidParameter(_) => 2,
            _ => 3,
        }
    }

    /// Short machine-readable category, paired with [`Error::exit_code`].
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::Parse { .. } => "parse",
            Error::Invariant(_) => "invariant",
            Error::Duplicate { .. } => "duplicate",
            Error::Degenerate(_) => "degenerate",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Numeric(_) => "numeric",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
