use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("history out of range: theta={theta} not in [{start}, {end}]")]
    HistoryOutOfRange { theta: f64, start: f64, end: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("predictor diverged at grid index {index} (|P| = {magnitude:e})")]
    PredictorDiverged { index: usize, magnitude: f64 },

    #[error("chattering predictor trajectory: more than {limit} switches in one window")]
    ChatteringPredictor { limit: usize },

    #[error("exponent too large: |A s| = {0:e}")]
    ExponentTooLarge(f64),

    #[error("non-positive lambda_min(Q) = {value:e} for mode {mode}")]
    QNotPositive { mode: usize, value: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
