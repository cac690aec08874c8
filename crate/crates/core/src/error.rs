use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by path construction, the regularization functionals and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("width {eps} is not a positive integer multiple of the grid step {step}")]
    EpsNotGridMultiple { eps: f64, step: f64 },

    #[error("time {t} is not a grid node (step {step}, horizon {horizon})")]
    NotANode { t: f64, step: f64, horizon: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("grid too large for exact fBm factorization: N = {steps} exceeds {max}")]
    FbmGridTooLarge { steps: usize, max: usize },

    #[error("covariance factorization failed at step {step} even after jitter")]
    Factorization { step: usize },

    #[error("gradient check failed at node {node}, component {component}: supplied {supplied}, finite difference {estimated}")]
    GradientMismatch {
        node: usize,
        component: usize,
        supplied: f64,
        estimated: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("file not found: {0}")]
    NotFound(PathBuf),

    #[error("schema version mismatch: found {found}, expected {expected}")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
