use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: negative weight")]
    NegativeWeight { line: usize },

    #[error("self-loop at node {node}")]
    SelfLoop { node: usize },

    #[error("parallel edge between {u} and {v}")]
    ParallelEdge { u: usize, v: usize },

    #[error("node {node} out of range (node count {count})")]
    InvalidNode { node: usize, count: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("edge attributes do not match the problem: {0}")]
    AttributeMismatch(String),

    #[error("domain mismatch: expected {expected} nodes, got {got}")]
    DomainMismatch { expected: usize, got: usize },

    #[error("coloring is not legal: edge ({u}, {v}) is monochromatic")]
    IllegalColoring { u: usize, v: usize },

    #[error("double greedy ended with z != y at node {node}")]
    TupleDisagreement { node: usize },

    #[error("node {node} decided a value outside the value domain")]
    OutOfDomain { node: usize },

    #[error("assignment is partial: node {node} is unassigned")]
    PartialAssignment { node: usize },

    #[error("round {round}: node {src} sent to non-neighbor {dst}")]
    NotANeighbor { src: usize, dst: usize, round: usize },

    #[error("round {round}: node {src} sent twice to {dst}")]
    DuplicateMessage { src: usize, dst: usize, round: usize },

    #[error("malformed payload: {0}")]
    Decode(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("schedule construction failed: {0}")]
    Schedule(String),

    #[error("search space {size} exceeds the oracle budget {budget}")]
    BudgetExceeded { size: u128, budget: u128 },
}
