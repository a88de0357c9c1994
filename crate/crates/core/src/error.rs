use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value at cell {index:?}")]
    NonFinite { index: Vec<usize> },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("weight vanishes at cell {index:?}; the dual weight would be infinite")]
    ZeroWeight { index: Vec<usize> },

    #[error("invalid exponents: {0}")]
    InvalidExponents(String),

    #[error("{what} is only defined for {zone}")]
    WrongZone { what: String, zone: &'static str },

    #[error("parameter `{name}` out of range: {detail}")]
    OutOfRange { name: String, detail: String },

    #[error("zero denominator: {0}")]
    ZeroDenominator(String),

    #[error("{0} requires a factorized weight")]
    NotFactorized(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Shape(#[from] ndarray::ShapeError),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn out_of_range(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::OutOfRange {
            name: name.into(),
            detail: detail.into(),
        }
    }
}
