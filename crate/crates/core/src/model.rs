//! Robot types, configurations, anchored configurations, and traversals.

use crate::error::ModelError;
use crate::graph::{Graph, VertexId};

pub type TypeId = usize;

/// The robot team: an ordered list of type names with per-type counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RobotTypes {
    names: Vec<String>,
    counts: Vec<u32>,
}

impl RobotTypes {
    pub fn new(types: Vec<(String, u32)>) -> Result<Self, ModelError> {
        if types.is_empty() || types.iter().any(|(_, c)| *c == 0) {
            return Err(ModelError::BadRobotTypes);
        }
        let (names, counts) = types.into_iter().unzip();
        Ok(RobotTypes { names, counts })
    }

    /// A single unnamed type with `k` robots.
    pub fn homogeneous(k: u32) -> Self {
        RobotTypes::new(vec![("robot".to_string(), k)]).expect("k >= 1")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, m: TypeId) -> &str {
        &self.names[m]
    }

    pub fn count(&self, m: TypeId) -> u32 {
        self.counts[m]
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn index_of(&self, name: &str) -> Option<TypeId> {
        self.names.iter().position(|n| n == name)
    }
}

/// A sparse robot placement: sorted `(vertex, type, count)` triples with
/// positive counts. Equality and hashing are defined by this map alone.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Configuration {
    entries: Vec<(VertexId, TypeId, u32)>,
}

impl Configuration {
    pub fn from_entries(entries: impl IntoIterator<Item = (VertexId, TypeId, u32)>) -> Self {
        let mut merged: std::collections::BTreeMap<(VertexId, TypeId), u32> =
            std::collections::BTreeMap::new();
        for (v, m, c) in entries {
            if c > 0 {
                *merged.entry((v, m)).or_insert(0) += c;
            }
        }
        Configuration {
            entries: merged.into_iter().map(|((v, m), c)| (v, m, c)).collect(),
        }
    }

    /// All robots of every type at a single vertex.
    pub fn all_at(v: VertexId, types: &RobotTypes) -> Self {
        Configuration::from_entries((0..types.len()).map(|m| (v, m, types.count(m))))
    }

    pub fn entries(&self) -> &[(VertexId, TypeId, u32)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count_at(&self, v: VertexId, m: TypeId) -> u32 {
        self.entries
            .iter()
            .find(|&&(w, t, _)| w == v && t == m)
            .map(|&(_, _, c)| c)
            .unwrap_or(0)
    }

    pub fn robots_at(&self, v: VertexId) -> u32 {
        self.entries
            .iter()
            .filter(|&&(w, _, _)| w == v)
            .map(|&(_, _, c)| c)
            .sum()
    }

    pub fn total_of_type(&self, m: TypeId) -> u32 {
        self.entries
            .iter()
            .filter(|&&(_, t, _)| t == m)
            .map(|&(_, _, c)| c)
            .sum()
    }

    /// Occupied vertices, sorted and deduplicated.
    pub fn occupied(&self) -> Vec<VertexId> {
        let mut out: Vec<VertexId> = self.entries.iter().map(|&(v, _, _)| v).collect();
        out.dedup();
        out
    }

    pub fn occupies(&self, v: VertexId) -> bool {
        self.entries.iter().any(|&(w, _, _)| w == v)
    }

    /// Bitmask of occupied vertices; requires `n <= 64`.
    pub fn occupied_mask(&self) -> u64 {
        let mut mask = 0u64;
        for &(v, _, _) in &self.entries {
            debug_assert!(v < 64);
            mask |= 1 << v;
        }
        mask
    }

    /// Relabel vertices through `map` (e.g. a monomorphism image).
    pub fn mapped(&self, map: &[VertexId]) -> Configuration {
        Configuration::from_entries(self.entries.iter().map(|&(v, m, c)| (map[v], m, c)))
    }

    pub fn validate(&self, graph: &Graph, types: &RobotTypes) -> Result<(), ModelError> {
        for &(v, m, c) in &self.entries {
            if v >= graph.n() {
                return Err(ModelError::VertexOutOfRange {
                    vertex: v,
                    n: graph.n(),
                });
            }
            if m >= types.len() {
                return Err(ModelError::TypeOutOfRange {
                    type_id: m,
                    m: types.len(),
                });
            }
            if c == 0 {
                return Err(ModelError::NonPositiveCount {
                    vertex: v,
                    type_id: m,
                });
            }
        }
        for m in 0..types.len() {
            let placed = self.total_of_type(m);
            if placed != types.count(m) {
                return Err(ModelError::TypeTotalMismatch {
                    type_id: m,
                    placed,
                    expected: types.count(m),
                });
            }
        }
        Ok(())
    }
}

/// The set of occupied vertices of a configuration.
pub fn occupied(config: &Configuration) -> Vec<VertexId> {
    config.occupied()
}

/// Whether the occupied vertices induce a connected subgraph of `g`.
pub fn is_connected_configuration(
    g: &Graph,
    config: &Configuration,
) -> Result<bool, ModelError> {
    let occ = config.occupied();
    for &v in &occ {
        if v >= g.n() {
            return Err(ModelError::VertexOutOfRange { vertex: v, n: g.n() });
        }
    }
    Ok(g.is_connected_subset(&occ))
}

/// How a configuration is witnessed as valid: either the occupied set
/// itself is the active set (the connectivity backend), or a library
/// formation is embedded by an explicit vertex map.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Anchor {
    Occupied,
    Formation {
        formation: usize,
        /// `map[pattern_vertex] = host_vertex`
        map: Vec<VertexId>,
    },
}

/// A configuration together with its anchoring witness. The configuration
/// is the identity-bearing part; the anchor determines the active set.
#[derive(Debug, Clone)]
pub struct AnchoredConfiguration {
    config: Configuration,
    anchor: Anchor,
}

impl AnchoredConfiguration {
    pub fn new(config: Configuration, anchor: Anchor) -> Result<Self, ModelError> {
        if let Anchor::Formation { map, .. } = &anchor {
            let active: std::collections::HashSet<VertexId> = map.iter().copied().collect();
            if active.len() != map.len() {
                return Err(ModelError::BadAnchor);
            }
            for v in config.occupied() {
                if !active.contains(&v) {
                    return Err(ModelError::OccupiedNotActive { vertex: v });
                }
            }
        }
        Ok(AnchoredConfiguration { config, anchor })
    }

    pub fn occupied_anchor(config: Configuration) -> Self {
        AnchoredConfiguration {
            config,
            anchor: Anchor::Occupied,
        }
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn anchor(&self) -> &Anchor {
        &self.anchor
    }

    /// Active vertices, sorted. Always a superset of the occupied set.
    pub fn active(&self) -> Vec<VertexId> {
        match &self.anchor {
            Anchor::Occupied => self.config.occupied(),
            Anchor::Formation { map, .. } => {
                let mut out = map.clone();
                out.sort_unstable();
                out
            }
        }
    }

    pub fn active_mask(&self) -> u64 {
        let mut mask = 0u64;
        for v in self.active() {
            debug_assert!(v < 64);
            mask |= 1 << v;
        }
        mask
    }
}

/// A sequence of anchored configurations. Time is the transition count,
/// i.e. one less than the number of configurations.
#[derive(Debug, Clone)]
pub struct Traversal {
    steps: Vec<AnchoredConfiguration>,
}

impl Traversal {
    pub fn new(steps: Vec<AnchoredConfiguration>) -> Result<Self, ModelError> {
        if steps.is_empty() {
            return Err(ModelError::EmptyTraversal);
        }
        Ok(Traversal { steps })
    }

    pub fn steps(&self) -> &[AnchoredConfiguration] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn config(&self, i: usize) -> &Configuration {
        self.steps[i].config()
    }

    pub fn first(&self) -> &AnchoredConfiguration {
        &self.steps[0]
    }

    pub fn last(&self) -> &AnchoredConfiguration {
        self.steps.last().unwrap()
    }
}

/// Transition count of a traversal.
pub fn traversal_time(x: &Traversal) -> usize {
    x.time()
}
