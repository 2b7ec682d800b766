//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self-loop at vertex {vertex}")]
    SelfLoop { vertex: usize },
    #[error("parallel edge {u}-{v}")]
    ParallelEdge { u: usize, v: usize },
    #[error("edge {u}-{v} not present")]
    EdgeNotPresent { u: usize, v: usize },
    #[error("label count {labels} does not match vertex count {n}")]
    LabelCountMismatch { labels: usize, n: usize },
    #[error("graph is not a tree")]
    NotATree,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("configuration count at vertex {vertex} for type {type_id} must be positive")]
    NonPositiveCount { vertex: usize, type_id: usize },
    #[error("configuration places {placed} robots of type {type_id}, expected {expected}")]
    TypeTotalMismatch {
        type_id: usize,
        placed: u32,
        expected: u32,
    },
    #[error("configuration references vertex {vertex} outside the graph ({n} vertices)")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("configuration references robot type {type_id}, only {m} declared")]
    TypeOutOfRange { type_id: usize, m: usize },
    #[error("traversal must contain at least one configuration")]
    EmptyTraversal,
    #[error("anchored configuration: occupied vertex {vertex} is not active")]
    OccupiedNotActive { vertex: usize },
    #[error("anchor map is not a monomorphism into the host graph")]
    BadAnchor,
    #[error("robot types must be nonempty with positive counts")]
    BadRobotTypes,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LibraryError {
    #[error("formation {name}: pattern graph must be connected")]
    DisconnectedPattern { name: String },
    #[error("formation {name}: placement invalid: {source}")]
    BadPlacement { name: String, source: ModelError },
    #[error("transposition {index}: endpoint configuration is not in form of any formation")]
    EndpointNotInForm { index: usize },
    #[error("transposition {index}: robot totals differ between endpoints")]
    TotalsMismatch { index: usize },
    #[error("transposition {index}: no per-type one-edge move plan exists")]
    MovesInfeasible { index: usize },
    #[error("transposition {index}: formation reference {formation} out of range")]
    BadFormationRef { index: usize, formation: usize },
    #[error("connectivity library bound exceeded: k={k} > {bound}")]
    KOverBound { k: u32, bound: u32 },
    #[error("backend is not collapsible")]
    NotCollapsible,
    #[error("regroup target {target} is not active")]
    TargetNotActive { target: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecompError {
    #[error("input is not a tree")]
    NotATree,
    #[error("bag {bag} references vertex {vertex} outside the graph")]
    BagVertexOutOfRange { bag: usize, vertex: usize },
    #[error("decomposition is invalid: {reason}")]
    Invalid { reason: String },
    #[error("bag id {bag} out of range")]
    BadBagId { bag: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("instance is infeasible: no valid traversal exists")]
    Infeasible,
    #[error("search budget exceeded ({what})")]
    BudgetExceeded { what: String },
    #[error("instance too large: {n} vertices exceeds the {max} supported by bitmask search")]
    TooLarge { n: usize, max: usize },
    #[error("not a repeated transition at ({i}, {j})")]
    InvalidSplice { i: usize, j: usize },
    #[error("start or end configuration is invalid under the constraint backend")]
    BadEndpoints,
    #[error("solver requires a rooted tree instance")]
    NotATree,
    #[error("epsilon must lie in (0, 1), got {eps}")]
    BadEpsilon { eps: f64 },
    #[error("backend is not collapsible; the approximation pipeline does not apply")]
    NotCollapsible,
    #[error("subtree solve failed: {0}")]
    SubSolver(String),
    #[error("start and end configurations must place all robots at the tree root")]
    EndpointsNotAtRoot,
    #[error("library error: {0}")]
    Library(#[from] LibraryError),
}
