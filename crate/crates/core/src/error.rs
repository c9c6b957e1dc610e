//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state space: {0}")]
    InvalidStateSpace(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("agent id {0} out of range (n = {1})")]
    BadAgentId(usize, usize),
    #[error("clustering error: {0}")]
    Clustering(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite loss at epoch {epoch}: {detail}")]
    NonFiniteLoss { epoch: usize, detail: String },
    #[error("missing rule for transition {0}")]
    MissingRule(String),
    #[error("unbound placeholder {{{0}}}")]
    UnboundPlaceholder(String),
    #[error("backend response violated the schema: {0}")]
    Schema(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("metrics error: {0}")]
    Metrics(String),
    #[error("engine error: {0}")]
    Engine(String),
    #[error("parse error in {file}:{line}: {detail}")]
    Parse {
        file: String,
        line: usize,
        detail: String,
    },
    #[error("ingestion error: {0}")]
    Ingest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
