use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("decomposition failed: {0}")]
    DecompositionFailure(String),

    #[error("ambiguous decomposition: {0}")]
    Ambiguous(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("resource budget exceeded: {0}")]
    ResourceBudget(String),

    #[error("matrix overflow at word {word:?}: entry magnitude exceeds {limit:e}")]
    Overflow { word: Vec<i16>, limit: f64 },

    #[error("input generators are not free at desk scale: words {0:?} and {1:?} collide")]
    NonFreeInput(Vec<i16>, Vec<i16>),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate measure: {0}")]
    DegenerateMeasure(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("stale cache: {0}")]
    StaleCache(String),

    #[error("cache format error: {0}")]
    CacheFormat(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("experiment aborted: {0}")]
    ExperimentAborted(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
