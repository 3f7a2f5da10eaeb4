use std::path::PathBuf;

use thiserror::Error;

use crate::measures::ItemId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid ranking: {0}")]
    InvalidRanking(String),

    #[error("no weight supplied for ranked item {0}")]
    MissingWeight(ItemId),

    #[error("total mass is zero")]
    ZeroMass,

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The sampler reached a state that its own invariants rule out.
    #[error("internal sampler error: {0}")]
    Internal(String),

    #[error("{path}:{line}: {message}")]
    Data {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("epoch {epoch}: {message}")]
    Epoch { epoch: String, message: String },

    #[error("malformed chain file: {0}")]
    Chain(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
