//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Operands do not agree in shape (image sizes, vector lengths, view counts).
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A robot model, scene or canvas fails validation.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A joint vector violates the model's limits or arity.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Malformed serialized data (RLE text/binary, PBM, roadmap JSON).
    #[error("format error: {0}")]
    Format(String),

    /// An argument is outside the operation's domain (empty sets, bad weights,
    /// zero sample counts, out-of-range indices).
    #[error("domain error: {0}")]
    Domain(String),

    /// A pose record carries no features for a link, so feature-based
    /// distances and joins are undefined for it.
    #[error("degenerate features: {0}")]
    DegenerateFeatures(String),

    /// An embedding cannot be produced (component too small, correlation
    /// undefined).
    #[error("embedding error: {0}")]
    Embedding(String),

    /// A query endpoint lies in collision and cannot join the roadmap.
    #[error("endpoint blocked: {0}")]
    EndpointBlocked(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
