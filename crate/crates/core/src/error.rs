use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("need at least 2 points, got {0}")]
    EmptyInput(usize),

    #[error("point {index} has length {found}, expected {expected}")]
    RaggedInput {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value at point {point}, coordinate {coord}")]
    NonFinite { point: usize, coord: usize },

    #[error("{name} = {value} is outside {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("length {0} is not a power of two")]
    NonPowerOfTwo(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("input of size {size} exceeds the limit {limit} for {what}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("size mismatch: {left} vs {right} points")]
    SizeMismatch { left: usize, right: usize },

    #[error("vector must be nonzero")]
    ZeroVector,

    #[error("no s-smooth sign diagonal found after {0} attempts")]
    NoSmoothDiagonal(usize),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyInput(_) => "EmptyInput",
            Error::RaggedInput { .. } => "RaggedInput",
            Error::NonFinite { .. } => "NonFinite",
            Error::Domain { .. } => "DomainError",
            Error::Precondition(_) => "PreconditionError",
            Error::NonPowerOfTwo(_) => "NonPowerOfTwo",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::TooLarge { .. } => "TooLarge",
            Error::SizeMismatch { .. } => "SizeMismatch",
            Error::ZeroVector => "ZeroVector",
            Error::NoSmoothDiagonal(_) => "NoSmoothDiagonal",
            Error::Parse { .. } => "ParseError",
            Error::Io(_) => "IoError",
            Error::Json(_) => "JsonError",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(name: &'static str, value: f64, range: &'static str) -> Error {
    Error::Domain { name, value, range }
}
