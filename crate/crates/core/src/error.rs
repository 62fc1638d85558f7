use std::io;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: u64 },

    #[error("line {line}: duplicate edge {from} -> {to}")]
    DuplicateEdge { line: usize, from: u64, to: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("RR collection is empty")]
    EmptyCollection,

    #[error("RR collection has no blue sets; the covering instance has no constraints")]
    NoBlueSets,

    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
