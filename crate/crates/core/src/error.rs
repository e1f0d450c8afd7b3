use crate::graph::NodeId;

/// Crate-wide error type. Variants are grouped by failure family so callers
/// (notably the CLI) can map them onto distinct exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty input: no records found")]
    EmptyInput,

    #[error("node {0} out of range for graph with {1} nodes")]
    NodeOutOfRange(NodeId, usize),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("selection pool too small for {what}: requested {requested}, available {available}")]
    PoolTooSmall {
        what: String,
        requested: usize,
        available: usize,
    },

    #[error("{count} graph label(s) missing from the partition table, e.g. {sample:?}")]
    UnmatchedLabels { count: usize, sample: Vec<String> },

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("graph has no edges")]
    EmptyEdgeSet,

    #[error("series too short: need at least {min} points, got {got}")]
    SeriesTooShort { min: usize, got: usize },

    #[error("series decreases at index {0}; cumulative series must be non-decreasing")]
    DecreasingSeries(usize),

    #[error("cannot fit a growth curve to a constant series")]
    DegenerateFit,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by malformed or unreadable input data.
    pub fn is_io_like(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::EmptyInput | Error::Io(_) | Error::Json(_)
        )
    }
}
