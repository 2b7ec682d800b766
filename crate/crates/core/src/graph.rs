//! Undirected simple graphs with dense vertex ids, plus rooted trees.

use crate::error::GraphError;

pub type VertexId = usize;

/// Undirected simple graph. Vertices are `0..n`; labels, when present,
/// map ids to stable external names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<VertexId>>,
    labels: Option<Vec<String>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            labels: None,
        }
    }

    pub fn from_edges(n: usize, edges: &[(VertexId, VertexId)]) -> Result<Self, GraphError> {
        let mut g = Graph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, u: VertexId, v: VertexId) -> Result<(), GraphError> {
        let n = self.n();
        if u >= n || v >= n {
            return Err(GraphError::VertexOutOfRange {
                vertex: u.max(v),
                n,
            });
        }
        if u == v {
            return Err(GraphError::SelfLoop { vertex: u });
        }
        if self.adj[u].contains(&v) {
            return Err(GraphError::ParallelEdge { u, v });
        }
        self.adj[u].push(v);
        self.adj[v].push(u);
        self.adj[u].sort_unstable();
        self.adj[v].sort_unstable();
        Ok(())
    }

    pub fn set_labels(&mut self, labels: Vec<String>) -> Result<(), GraphError> {
        if labels.len() != self.n() {
            return Err(GraphError::LabelCountMismatch {
                labels: labels.len(),
                n: self.n(),
            });
        }
        self.labels = Some(labels);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adj[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(|a| a.len()).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        u < self.n() && self.adj[u].binary_search(&v).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    /// Edges as (u, v) with u < v, sorted.
    pub fn edges(&self) -> Vec<(VertexId, VertexId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.n() {
            for &v in &self.adj[u] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn label(&self, v: VertexId) -> Option<&str> {
        self.labels.as_ref().map(|l| l[v].as_str())
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn is_connected(&self) -> bool {
        if self.n() == 0 {
            return true;
        }
        let all: Vec<VertexId> = (0..self.n()).collect();
        self.is_connected_subset(&all)
    }

    /// Whether the subgraph induced on `verts` is connected. Empty sets
    /// count as disconnected; singletons as connected.
    pub fn is_connected_subset(&self, verts: &[VertexId]) -> bool {
        if verts.is_empty() {
            return false;
        }
        let member: std::collections::HashSet<VertexId> = verts.iter().copied().collect();
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![verts[0]];
        seen.insert(verts[0]);
        while let Some(u) = stack.pop() {
            for &w in &self.adj[u] {
                if member.contains(&w) && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen.len() == member.len()
    }

    pub fn is_tree(&self) -> bool {
        self.n() > 0 && self.edge_count() == self.n() - 1 && self.is_connected()
    }

    /// Contract edge `{u, v}` into a single vertex. Returns the contracted
    /// graph and the old-to-new vertex map. The merged vertex takes the
    /// smaller endpoint's slot; higher ids shift down by one.
    pub fn contract_edge(
        &self,
        u: VertexId,
        v: VertexId,
    ) -> Result<(Graph, Vec<VertexId>), GraphError> {
        if !self.has_edge(u, v) {
            return Err(GraphError::EdgeNotPresent { u, v });
        }
        let (keep, drop) = if u < v { (u, v) } else { (v, u) };
        let mut map = Vec::with_capacity(self.n());
        for w in 0..self.n() {
            if w == drop {
                map.push(keep);
            } else if w > drop {
                map.push(w - 1);
            } else {
                map.push(w);
            }
        }
        let mut g = Graph::new(self.n() - 1);
        for (a, b) in self.edges() {
            let (na, nb) = (map[a], map[b]);
            if na != nb && !g.has_edge(na, nb) {
                g.add_edge(na, nb)?;
            }
        }
        if let Some(labels) = &self.labels {
            let mut nl: Vec<String> = Vec::with_capacity(self.n() - 1);
            for w in 0..self.n() {
                if w != drop {
                    nl.push(labels[w].clone());
                }
            }
            g.set_labels(nl)?;
        }
        Ok((g, map))
    }

    /// Induced subgraph on `verts` (order defines the new ids).
    pub fn induced(&self, verts: &[VertexId]) -> Result<Graph, GraphError> {
        let mut pos = std::collections::HashMap::new();
        for (i, &v) in verts.iter().enumerate() {
            if v >= self.n() {
                return Err(GraphError::VertexOutOfRange { vertex: v, n: self.n() });
            }
            pos.insert(v, i);
        }
        let mut g = Graph::new(verts.len());
        for (i, &v) in verts.iter().enumerate() {
            for &w in &self.adj[v] {
                if let Some(&j) = pos.get(&w) {
                    if i < j {
                        g.add_edge(i, j)?;
                    }
                }
            }
        }
        if let Some(labels) = &self.labels {
            g.set_labels(verts.iter().map(|&v| labels[v].clone()).collect())?;
        }
        Ok(g)
    }
}

/// A tree with a designated root and derived parent/children structure.
#[derive(Debug, Clone)]
pub struct RootedTree {
    graph: Graph,
    root: VertexId,
    parent: Vec<Option<VertexId>>,
    children: Vec<Vec<VertexId>>,
}

impl RootedTree {
    pub fn new(graph: Graph, root: VertexId) -> Result<Self, GraphError> {
        if root >= graph.n() {
            return Err(GraphError::VertexOutOfRange {
                vertex: root,
                n: graph.n(),
            });
        }
        if !graph.is_tree() {
            return Err(GraphError::NotATree);
        }
        let n = graph.n();
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut order = vec![root];
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut i = 0;
        while i < order.len() {
            let u = order[i];
            i += 1;
            for &w in graph.neighbors(u) {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(u);
                    children[u].push(w);
                    order.push(w);
                }
            }
        }
        Ok(RootedTree {
            graph,
            root,
            parent,
            children,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.parent[v]
    }

    pub fn children(&self, v: VertexId) -> &[VertexId] {
        &self.children[v]
    }

    pub fn is_leaf(&self, v: VertexId) -> bool {
        self.children[v].is_empty()
    }

    /// Vertices of the subtree rooted at `v`, in preorder.
    pub fn subtree(&self, v: VertexId) -> Vec<VertexId> {
        let mut out = vec![v];
        let mut i = 0;
        while i < out.len() {
            let u = out[i];
            i += 1;
            out.extend_from_slice(&self.children[u]);
        }
        out
    }

    /// Vertices in postorder (children before parents).
    pub fn postorder(&self) -> Vec<VertexId> {
        let mut out = self.subtree(self.root);
        out.reverse();
        out
    }
}
