use thiserror::Error;

use crate::graph::NodeId;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A topology file line could not be parsed or violates a topology invariant.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// A topology could not be built from the given nodes and links.
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    /// A node id outside `[0, |N|)` was referenced.
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
    /// Source and destination of a path request are the same node.
    #[error("source and destination must differ (both are {0})")]
    SameEndpoints(NodeId),
    /// The operation needs a connected topology.
    #[error("topology is disconnected")]
    Disconnected,
    /// A generator needs more nodes than requested.
    #[error("{kind} generator needs at least {min} nodes, got {n}")]
    TooFewNodes {
        kind: &'static str,
        n: usize,
        min: usize,
    },
    /// Lattice sizes must be perfect squares.
    #[error("{0} is not a perfect square i*i with i >= 3")]
    NotSquare(usize),
    /// Rejection sampling did not produce a two-connected graph.
    #[error("no two-connected {kind} graph with {n} nodes after {attempts} attempts")]
    RetriesExhausted {
        kind: &'static str,
        n: usize,
        attempts: usize,
    },
    /// A forwarding matrix is internally inconsistent.
    #[error("invalid forwarding matrix: {0}")]
    InvalidMatrix(String),
    /// A failure scenario, label or variant string could not be parsed.
    #[error("cannot parse {what} from {input:?}")]
    Syntax { what: &'static str, input: String },
    /// Experiment configuration problem.
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
