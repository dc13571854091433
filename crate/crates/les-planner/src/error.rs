use thiserror::Error;

use crate::tree::VertexId;

/// Crate-wide error type.
///
/// Contract violations (unknown ids, cycle-creating rewires, mismatched
/// subsets) get dedicated variants so callers can tell a programming error
/// apart from an unsolvable problem or bad user input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("state lies outside the search-space bounds")]
    OutOfBounds,
    #[error("unknown vertex id {0}")]
    UnknownVertex(VertexId),
    #[error("vertex {child} is not a child of {parent}")]
    NotAChild { parent: VertexId, child: VertexId },
    #[error("rewiring {vertex} under {parent} would create a cycle")]
    RewireCycle { vertex: VertexId, parent: VertexId },
    #[error("rewiring {vertex} does not improve its cost-to-come")]
    RewireNotImproving { vertex: VertexId },
    #[error("operation requires a non-root vertex")]
    RootVertex,
    #[error("vertex {0} has no children")]
    LeafVertex(VertexId),
    #[error("solution cost {cost} is below the theoretical minimum {minimum}")]
    CostBelowMinimum { cost: f64, minimum: f64 },
    #[error("no vertex inside the goal region")]
    NoSolution,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),
    #[error("invalid benchmark records: {0}")]
    InvalidRecords(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
