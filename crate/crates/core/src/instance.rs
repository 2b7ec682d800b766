//! Problem instances and the traversal validity/coverage checker.

use crate::decomp::RawDecomposition;
use crate::error::ModelError;
use crate::formation::ConstraintBackend;
use crate::graph::{Graph, RootedTree, VertexId};
use crate::model::{AnchoredConfiguration, Configuration, RobotTypes, Traversal};

/// A coverage problem: host graph, robot team, constraint backend, and
/// the fixed start/end configurations.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: Graph,
    pub root: Option<VertexId>,
    pub robots: RobotTypes,
    pub backend: ConstraintBackend,
    pub start: AnchoredConfiguration,
    pub end: AnchoredConfiguration,
    /// Optional externally supplied tree decomposition.
    pub decomposition: Option<RawDecomposition>,
}

impl Instance {
    pub fn new(
        graph: Graph,
        robots: RobotTypes,
        backend: ConstraintBackend,
        start: Configuration,
        end: Configuration,
    ) -> Result<Self, ModelError> {
        let start = backend
            .anchor_config(&graph, &robots, &start)
            .ok_or(ModelError::BadAnchor)?;
        let end = backend
            .anchor_config(&graph, &robots, &end)
            .ok_or(ModelError::BadAnchor)?;
        Ok(Instance {
            graph,
            root: None,
            robots,
            backend,
            start,
            end,
            decomposition: None,
        })
    }

    pub fn with_root(mut self, root: VertexId) -> Self {
        self.root = Some(root);
        self
    }

    pub fn with_decomposition(mut self, d: RawDecomposition) -> Self {
        self.decomposition = Some(d);
        self
    }

    /// The instance as a rooted tree, when the host is a tree.
    pub fn rooted_tree(&self) -> Option<RootedTree> {
        if !self.graph.is_tree() {
            return None;
        }
        RootedTree::new(self.graph.clone(), self.root.unwrap_or(0)).ok()
    }
}

/// Outcome of checking one traversal against one instance. Checks are
/// independent; this is a diagnostic, it never fails early.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraversalReport {
    pub start_matches: bool,
    pub end_matches: bool,
    /// Indices whose configuration is invalid under the backend.
    pub invalid_configs: Vec<usize>,
    /// Indices `i` where the step `i -> i+1` is not a valid transition.
    pub invalid_transitions: Vec<usize>,
    /// Vertices never occupied.
    pub unvisited: Vec<VertexId>,
    pub time: usize,
}

impl TraversalReport {
    pub fn passed(&self) -> bool {
        self.start_matches
            && self.end_matches
            && self.invalid_configs.is_empty()
            && self.invalid_transitions.is_empty()
            && self.unvisited.is_empty()
    }
}

/// Check endpoints, per-step validity, and coverage of a traversal.
pub fn validate_traversal(inst: &Instance, x: &Traversal) -> TraversalReport {
    let start_matches = x.config(0) == inst.start.config();
    let end_matches = x.config(x.len() - 1) == inst.end.config();
    let mut invalid_configs = Vec::new();
    let mut invalid_transitions = Vec::new();
    for i in 0..x.len() {
        if !inst
            .backend
            .is_valid_config(&inst.graph, &inst.robots, x.config(i))
        {
            invalid_configs.push(i);
        }
        if i + 1 < x.len()
            && !inst.backend.is_valid_transition(
                &inst.graph,
                &inst.robots,
                x.config(i),
                x.config(i + 1),
            )
        {
            invalid_transitions.push(i);
        }
    }
    let mut visited = vec![false; inst.graph.n()];
    for step in x.steps() {
        for v in step.config().occupied() {
            if v < visited.len() {
                visited[v] = true;
            }
        }
    }
    let unvisited = (0..inst.graph.n()).filter(|&v| !visited[v]).collect();
    TraversalReport {
        start_matches,
        end_matches,
        invalid_configs,
        invalid_transitions,
        unvisited,
        time: x.time(),
    }
}
