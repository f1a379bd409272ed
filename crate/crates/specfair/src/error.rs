//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("node id {id} out of range for graph with {n} nodes")]
    NodeOutOfRange { id: u32, n: usize },

    #[error("graph is empty")]
    EmptyGraph,

    #[error("graph is disconnected; extract the largest connected component first")]
    Disconnected,

    #[error("node {0} is isolated (degree 0)")]
    IsolatedNode(usize),

    #[error("edge ({i}, {j}) already exists")]
    EdgeExists { i: u32, j: u32 },

    #[error("graph with {n} nodes exceeds the limit of {limit} for this operation")]
    GraphTooLarge { n: usize, limit: usize },

    #[error("eigensolver did not converge within {iterations} matvecs (best lambda2 {best_lambda2:.6e}, residual {residual:.3e})")]
    NotConverged {
        best_lambda2: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("operation requires an exact distance histogram, got a sampled one")]
    SampledHistogram,

    #[error("tail profile mismatch at radius {r}: histogram route {from_hist}, ball route {from_balls}")]
    TailMismatch {
        r: usize,
        from_hist: u64,
        from_balls: u64,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
