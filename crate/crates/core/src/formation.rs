//! Formations, transpositions, and the two constraint backends.
//!
//! A formation is a connected pattern graph with a robot placement; a
//! transposition is a one-step move between two placements on a shared
//! pattern graph where every robot travels at most one edge. The explicit
//! backend answers validity queries by embedding these patterns into the
//! host graph; the implicit backend is the connectivity special case
//! (every connected placement is valid, transitions are one-edge moves
//! that keep both endpoints connected).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::ops::ControlFlow;

use crate::error::LibraryError;
use crate::graph::{Graph, VertexId};
use crate::model::{Anchor, AnchoredConfiguration, Configuration, RobotTypes, TypeId};

/// A permissible team shape: connected pattern graph plus placement.
#[derive(Debug, Clone)]
pub struct Formation {
    pub name: String,
    pub graph: Graph,
    pub placement: Configuration,
}

/// A permissible one-step move: two placements on a shared pattern graph,
/// each in form of a referenced formation, reachable from one another by
/// moving every robot along at most one pattern edge. Transpositions are
/// undirected.
#[derive(Debug, Clone)]
pub struct Transposition {
    pub graph: Graph,
    pub src: Configuration,
    pub dst: Configuration,
    pub src_formation: usize,
    pub dst_formation: usize,
    /// `src_map[formation_vertex] = pattern_vertex`
    pub src_map: Vec<VertexId>,
    pub dst_map: Vec<VertexId>,
}

#[derive(Debug, Clone, Default)]
pub struct FormationLibrary {
    pub formations: Vec<Formation>,
    pub transpositions: Vec<Transposition>,
}

/// Aggregate size figures used in bound computations and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LibraryStats {
    pub formation_count: usize,
    pub max_pattern_vertices: usize,
    pub max_pattern_edges: usize,
    pub representation_length: usize,
}

impl FormationLibrary {
    pub fn new(
        formations: Vec<Formation>,
        transpositions: Vec<Transposition>,
        types: &RobotTypes,
    ) -> Result<Self, LibraryError> {
        for f in &formations {
            if !f.graph.is_connected() {
                return Err(LibraryError::DisconnectedPattern {
                    name: f.name.clone(),
                });
            }
            f.placement
                .validate(&f.graph, types)
                .map_err(|e| LibraryError::BadPlacement {
                    name: f.name.clone(),
                    source: e,
                })?;
        }
        let lib = FormationLibrary {
            formations,
            transpositions,
        };
        for (i, t) in lib.transpositions.iter().enumerate() {
            lib.validate_transposition_entry(i, t, types)?;
        }
        Ok(lib)
    }

    fn validate_transposition_entry(
        &self,
        index: usize,
        t: &Transposition,
        _types: &RobotTypes,
    ) -> Result<(), LibraryError> {
        for (&fid, map, cfg) in [
            (&t.src_formation, &t.src_map, &t.src),
            (&t.dst_formation, &t.dst_map, &t.dst),
        ] {
            let f = self
                .formations
                .get(fid)
                .ok_or(LibraryError::BadFormationRef {
                    index,
                    formation: fid,
                })?;
            if !pullback_matches(cfg, &f.placement, map, &f.graph, &t.graph) {
                return Err(LibraryError::EndpointNotInForm { index });
            }
        }
        if !validate_transposition(t) {
            // distinguish totals mismatch from infeasible moves for diagnostics
            let m_count = t
                .src
                .entries()
                .iter()
                .chain(t.dst.entries())
                .map(|&(_, m, _)| m + 1)
                .max()
                .unwrap_or(0);
            for m in 0..m_count {
                if t.src.total_of_type(m) != t.dst.total_of_type(m) {
                    return Err(LibraryError::TotalsMismatch { index });
                }
            }
            return Err(LibraryError::MovesInfeasible { index });
        }
        Ok(())
    }

    pub fn stats(&self) -> LibraryStats {
        let formation_count = self.formations.len();
        let max_pattern_vertices = self
            .formations
            .iter()
            .map(|f| f.graph.n())
            .max()
            .unwrap_or(0);
        let max_pattern_edges = self
            .formations
            .iter()
            .map(|f| f.graph.edge_count())
            .max()
            .unwrap_or(0);
        // adjacency lists plus |V_alpha| x |M| placement tables
        let m = self
            .formations
            .iter()
            .flat_map(|f| f.placement.entries().iter().map(|&(_, t, _)| t + 1))
            .max()
            .unwrap_or(1);
        let mut representation_length = 0;
        for f in &self.formations {
            representation_length += f.graph.n() + 2 * f.graph.edge_count() + f.graph.n() * m;
        }
        for t in &self.transpositions {
            representation_length += t.graph.n() + 2 * t.graph.edge_count() + 2 * t.graph.n() * m;
        }
        LibraryStats {
            formation_count,
            max_pattern_vertices,
            max_pattern_edges,
            representation_length,
        }
    }
}

/// Whether `config` equals the pushforward of `placement` through `map`
/// with no robots outside the image.
fn pullback_matches(
    config: &Configuration,
    placement: &Configuration,
    map: &[VertexId],
    pattern: &Graph,
    host: &Graph,
) -> bool {
    if map.len() != pattern.n() {
        return false;
    }
    let image: HashSet<VertexId> = map.iter().copied().collect();
    if image.len() != map.len() {
        return false;
    }
    for (u, v) in pattern.edges() {
        if !host.has_edge(map[u], map[v]) {
            return false;
        }
    }
    let pushed = placement.mapped(map);
    pushed == *config
}

// ---------------------------------------------------------------------------
// Monomorphism search
// ---------------------------------------------------------------------------

/// Visit every injective map extending `pin` that sends pattern edges to
/// host edges. Pattern vertices are assigned in id order and host
/// candidates tried in ascending id order, so the visit order is
/// deterministic (lexicographic).
pub fn for_each_monomorphism<F>(pattern: &Graph, host: &Graph, pin: &[Option<VertexId>], f: &mut F)
where
    F: FnMut(&[VertexId]) -> ControlFlow<()>,
{
    let p = pattern.n();
    let mut assign: Vec<Option<VertexId>> = vec![None; p];
    let mut used: Vec<bool> = vec![false; host.n()];
    for (i, slot) in pin.iter().enumerate().take(p) {
        if let Some(h) = *slot {
            if h >= host.n() || used[h] {
                return;
            }
            assign[i] = Some(h);
            used[h] = true;
        }
    }
    // check pin edge-consistency among pinned pairs
    for (u, v) in pattern.edges() {
        if let (Some(a), Some(b)) = (assign[u], assign[v]) {
            if !host.has_edge(a, b) {
                return;
            }
        }
    }
    fn rec<F>(
        pattern: &Graph,
        host: &Graph,
        assign: &mut Vec<Option<VertexId>>,
        used: &mut Vec<bool>,
        next: usize,
        f: &mut F,
    ) -> ControlFlow<()>
    where
        F: FnMut(&[VertexId]) -> ControlFlow<()>,
    {
        let p = pattern.n();
        let mut i = next;
        while i < p && assign[i].is_some() {
            i += 1;
        }
        if i == p {
            let full: Vec<VertexId> = assign.iter().map(|a| a.unwrap()).collect();
            return f(&full);
        }
        'cand: for h in 0..host.n() {
            if used[h] {
                continue;
            }
            for &w in pattern.neighbors(i) {
                if let Some(hw) = assign[w] {
                    if !host.has_edge(h, hw) {
                        continue 'cand;
                    }
                }
            }
            assign[i] = Some(h);
            used[h] = true;
            let flow = rec(pattern, host, assign, used, i + 1, f);
            assign[i] = None;
            used[h] = false;
            flow?;
        }
        ControlFlow::Continue(())
    }
    let _ = rec(pattern, host, &mut assign, &mut used, 0, f);
}

/// All monomorphisms, in deterministic order.
pub fn find_monomorphisms(
    pattern: &Graph,
    host: &Graph,
    pin: &[Option<VertexId>],
) -> Vec<Vec<VertexId>> {
    let mut out = Vec::new();
    for_each_monomorphism(pattern, host, pin, &mut |m| {
        out.push(m.to_vec());
        ControlFlow::Continue(())
    });
    out
}

/// Isomorphism test for pattern graphs carrying placements. Placements map
/// through the bijection and must match exactly; `colorings` pairs are
/// checked in order.
pub fn isomorphic_with_placements(
    g1: &Graph,
    p1: &[&Configuration],
    g2: &Graph,
    p2: &[&Configuration],
) -> bool {
    if g1.n() != g2.n() || g1.edge_count() != g2.edge_count() || p1.len() != p2.len() {
        return false;
    }
    let mut d1: Vec<usize> = (0..g1.n()).map(|v| g1.degree(v)).collect();
    let mut d2: Vec<usize> = (0..g2.n()).map(|v| g2.degree(v)).collect();
    d1.sort_unstable();
    d2.sort_unstable();
    if d1 != d2 {
        return false;
    }
    let mut found = false;
    for_each_monomorphism(g1, g2, &vec![None; g1.n()], &mut |map| {
        // equal vertex and edge counts make any monomorphism a bijection
        // that maps non-edges to non-edges, i.e. an isomorphism
        if p1
            .iter()
            .zip(p2.iter())
            .all(|(a, b)| a.mapped(map) == **b)
        {
            found = true;
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    });
    found
}

// ---------------------------------------------------------------------------
// Move feasibility
// ---------------------------------------------------------------------------

/// Whether every robot can be routed from `src` to `dst` moving along at
/// most one edge of `g` (staying put allowed), independently per type.
/// Robots of a type are indistinguishable, so this is a transportation
/// feasibility question; with at most `k` sinks per type, Gale's condition
/// over sink subsets decides it.
pub fn moves_feasible(g: &Graph, src: &Configuration, dst: &Configuration) -> bool {
    let types: BTreeSet<TypeId> = src
        .entries()
        .iter()
        .chain(dst.entries())
        .map(|&(_, m, _)| m)
        .collect();
    for m in types {
        if src.total_of_type(m) != dst.total_of_type(m) {
            return false;
        }
        let sources: Vec<(VertexId, u32)> = src
            .entries()
            .iter()
            .filter(|&&(_, t, _)| t == m)
            .map(|&(v, _, c)| (v, c))
            .collect();
        let sinks: Vec<(VertexId, u32)> = dst
            .entries()
            .iter()
            .filter(|&&(_, t, _)| t == m)
            .map(|&(v, _, c)| (v, c))
            .collect();
        let s = sinks.len();
        for subset in 1u32..(1 << s) {
            let mut demand = 0u32;
            let mut supply = 0u32;
            for (&(v, cap), _) in sources.iter().zip(std::iter::repeat(())) {
                let reaches = sinks.iter().enumerate().any(|(i, &(w, _))| {
                    subset & (1 << i) != 0 && (v == w || g.has_edge(v, w))
                });
                if reaches {
                    supply += cap;
                }
            }
            for (i, &(_, need)) in sinks.iter().enumerate() {
                if subset & (1 << i) != 0 {
                    demand += need;
                }
            }
            if demand > supply {
                return false;
            }
        }
    }
    true
}

/// Whether a transposition's move assignment is realizable: matching totals
/// per type and a feasible one-edge transportation plan on its pattern graph.
pub fn validate_transposition(t: &Transposition) -> bool {
    moves_feasible(&t.graph, &t.src, &t.dst)
}

// ---------------------------------------------------------------------------
// Constraint backends
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum ConstraintBackend {
    /// All connected configurations are valid; transitions are one-edge
    /// moves connected at both ends.
    ImplicitConnected,
    Explicit(FormationLibrary),
}

impl ConstraintBackend {
    pub fn is_explicit(&self) -> bool {
        matches!(self, ConstraintBackend::Explicit(_))
    }

    pub fn library(&self) -> Option<&FormationLibrary> {
        match self {
            ConstraintBackend::Explicit(lib) => Some(lib),
            ConstraintBackend::ImplicitConnected => None,
        }
    }

    pub fn is_valid_config(&self, g: &Graph, types: &RobotTypes, config: &Configuration) -> bool {
        if config.validate(g, types).is_err() {
            return false;
        }
        match self {
            ConstraintBackend::ImplicitConnected => g.is_connected_subset(&config.occupied()),
            ConstraintBackend::Explicit(lib) => self.anchor_config(g, types, config).is_some()
                && !lib.formations.is_empty(),
        }
    }

    /// First anchoring witness in deterministic order, if any.
    pub fn anchor_config(
        &self,
        g: &Graph,
        types: &RobotTypes,
        config: &Configuration,
    ) -> Option<AnchoredConfiguration> {
        if config.validate(g, types).is_err() {
            return None;
        }
        match self {
            ConstraintBackend::ImplicitConnected => {
                if g.is_connected_subset(&config.occupied()) {
                    Some(AnchoredConfiguration::occupied_anchor(config.clone()))
                } else {
                    None
                }
            }
            ConstraintBackend::Explicit(lib) => {
                for (fid, f) in lib.formations.iter().enumerate() {
                    let anchors = is_in_form(config, f, g, fid);
                    if let Some(a) = anchors.into_iter().next() {
                        return Some(a);
                    }
                }
                None
            }
        }
    }

    /// Whether `(a, b)` is a valid transition. Anchors are existential:
    /// only the configurations matter.
    pub fn is_valid_transition(
        &self,
        g: &Graph,
        types: &RobotTypes,
        a: &Configuration,
        b: &Configuration,
    ) -> bool {
        match self {
            ConstraintBackend::ImplicitConnected => {
                self.is_valid_config(g, types, a)
                    && self.is_valid_config(g, types, b)
                    && moves_feasible(g, a, b)
            }
            ConstraintBackend::Explicit(lib) => {
                for t in &lib.transpositions {
                    for (src, dst) in [(&t.src, &t.dst), (&t.dst, &t.src)] {
                        if transposition_witnesses(g, &t.graph, src, dst, a, b) {
                            return true;
                        }
                    }
                }
                false
            }
        }
    }

    /// Complete, duplicate-free successor list of `a`, in ascending
    /// configuration order. Includes `a` itself whenever holding is valid.
    pub fn enumerate_transitions(
        &self,
        g: &Graph,
        _types: &RobotTypes,
        a: &AnchoredConfiguration,
    ) -> Vec<AnchoredConfiguration> {
        match self {
            ConstraintBackend::ImplicitConnected => implicit_successors(g, a),
            ConstraintBackend::Explicit(lib) => explicit_successors(g, lib, a),
        }
    }
}

/// Is there a monomorphism of the transposition pattern into `g` under
/// which `(a, b)` pulls back to `(src, dst)` exactly?
fn transposition_witnesses(
    g: &Graph,
    pattern: &Graph,
    src: &Configuration,
    dst: &Configuration,
    a: &Configuration,
    b: &Configuration,
) -> bool {
    // cheap rejects: robot totals and support sizes must be compatible
    if src.entries().len() != a.entries().len() || dst.entries().len() != b.entries().len() {
        return false;
    }
    let mut found = false;
    for_each_monomorphism(pattern, g, &vec![None; pattern.n()], &mut |map| {
        if src.mapped(map) == *a && dst.mapped(map) == *b {
            found = true;
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    });
    found
}

fn implicit_successors(g: &Graph, a: &AnchoredConfiguration) -> Vec<AnchoredConfiguration> {
    let entries = a.config().entries();
    let mut partials: Vec<BTreeMap<(VertexId, TypeId), u32>> = vec![BTreeMap::new()];
    for &(v, m, c) in entries {
        let mut targets: Vec<VertexId> = vec![v];
        targets.extend_from_slice(g.neighbors(v));
        targets.sort_unstable();
        let splits = compositions(c, targets.len());
        let mut next = Vec::with_capacity(partials.len() * splits.len());
        for base in &partials {
            for split in &splits {
                let mut acc = base.clone();
                for (i, &cnt) in split.iter().enumerate() {
                    if cnt > 0 {
                        *acc.entry((targets[i], m)).or_insert(0) += cnt;
                    }
                }
                next.push(acc);
            }
        }
        partials = next;
    }
    let mut seen = BTreeSet::new();
    for acc in partials {
        let cfg = Configuration::from_entries(acc.into_iter().map(|((v, m), c)| (v, m, c)));
        if g.is_connected_subset(&cfg.occupied()) {
            seen.insert(cfg);
        }
    }
    seen.into_iter()
        .map(AnchoredConfiguration::occupied_anchor)
        .collect()
}

/// All ways to write `total` as an ordered sum of `parts` nonnegative terms.
fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(left: u32, parts: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for take in 0..=left {
            cur.push(take);
            rec(left - take, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    let mut cur = Vec::new();
    rec(total, parts, &mut cur, &mut out);
    out
}

fn explicit_successors(
    g: &Graph,
    lib: &FormationLibrary,
    a: &AnchoredConfiguration,
) -> Vec<AnchoredConfiguration> {
    let mut out: BTreeMap<Configuration, AnchoredConfiguration> = BTreeMap::new();
    for t in &lib.transpositions {
        let dirs = [
            (&t.src, &t.dst, t.dst_formation, &t.dst_map),
            (&t.dst, &t.src, t.src_formation, &t.src_map),
        ];
        for (src, dst, dst_formation, dst_map) in dirs {
            if src.entries().len() != a.config().entries().len() {
                continue;
            }
            for_each_monomorphism(&t.graph, g, &vec![None; t.graph.n()], &mut |map| {
                if src.mapped(map) == *a.config() {
                    let succ = dst.mapped(map);
                    let anchor_map: Vec<VertexId> =
                        dst_map.iter().map(|&pv| map[pv]).collect();
                    out.entry(succ.clone()).or_insert_with(|| {
                        AnchoredConfiguration::new(
                            succ,
                            Anchor::Formation {
                                formation: dst_formation,
                                map: anchor_map,
                            },
                        )
                        .expect("transposition endpoints are in form")
                    });
                }
                ControlFlow::Continue(())
            });
        }
    }
    out.into_values().collect()
}

/// Anchorings of `config` in form of formation `f` (one per witnessing
/// monomorphism, in deterministic order).
pub fn is_in_form(
    config: &Configuration,
    f: &Formation,
    host: &Graph,
    formation_id: usize,
) -> Vec<AnchoredConfiguration> {
    let mut out = Vec::new();
    // robot totals must match for a pullback to exist at all
    let m_count = f
        .placement
        .entries()
        .iter()
        .chain(config.entries())
        .map(|&(_, m, _)| m + 1)
        .max()
        .unwrap_or(0);
    for m in 0..m_count {
        if config.total_of_type(m) != f.placement.total_of_type(m) {
            return out;
        }
    }
    if config.entries().len() != f.placement.entries().len() {
        return out;
    }
    for_each_monomorphism(&f.graph, host, &vec![None; f.graph.n()], &mut |map| {
        if f.placement.mapped(map) == *config {
            out.push(
                AnchoredConfiguration::new(
                    config.clone(),
                    Anchor::Formation {
                        formation: formation_id,
                        map: map.to_vec(),
                    },
                )
                .expect("pullback equality implies occupied within image"),
            );
        }
        ControlFlow::Continue(())
    });
    out
}

/// All anchored configurations whose active set intersects `touch`
/// (every vertex in `touch` if `touch` is empty means: none). Used by the
/// signature solver to build its per-bag alphabets.
pub fn enumerate_configs_touching(
    backend: &ConstraintBackend,
    g: &Graph,
    types: &RobotTypes,
    touch: &[VertexId],
) -> Vec<AnchoredConfiguration> {
    if touch.is_empty() {
        return Vec::new();
    }
    match backend {
        ConstraintBackend::ImplicitConnected => {
            let k = types.total() as usize;
            let mut out = Vec::new();
            let mut seen = BTreeSet::new();
            for support in connected_subsets_up_to(g, k) {
                if !support.iter().any(|v| touch.contains(v)) {
                    continue;
                }
                for placement in positive_placements(&support, types) {
                    if seen.insert(placement.clone()) {
                        out.push(AnchoredConfiguration::occupied_anchor(placement));
                    }
                }
            }
            out.sort_by(|a, b| a.config().cmp(b.config()));
            out
        }
        ConstraintBackend::Explicit(lib) => {
            let mut out: Vec<AnchoredConfiguration> = Vec::new();
            let mut seen: BTreeSet<(Configuration, Vec<VertexId>)> = BTreeSet::new();
            for (fid, f) in lib.formations.iter().enumerate() {
                for_each_monomorphism(&f.graph, g, &vec![None; f.graph.n()], &mut |map| {
                    if map.iter().any(|v| touch.contains(v)) {
                        let cfg = f.placement.mapped(map);
                        let mut act = map.to_vec();
                        act.sort_unstable();
                        if seen.insert((cfg.clone(), act)) {
                            out.push(
                                AnchoredConfiguration::new(
                                    cfg,
                                    Anchor::Formation {
                                        formation: fid,
                                        map: map.to_vec(),
                                    },
                                )
                                .expect("pushforward occupies only the image"),
                            );
                        }
                    }
                    ControlFlow::Continue(())
                });
            }
            out.sort_by(|a, b| {
                (a.config(), a.active()).cmp(&(b.config(), b.active()))
            });
            out
        }
    }
}

/// Connected vertex subsets of `g` with `1..=k` vertices, each sorted.
pub fn connected_subsets_up_to(g: &Graph, k: usize) -> Vec<Vec<VertexId>> {
    let mut out = Vec::new();
    for start in 0..g.n() {
        // grow subsets whose minimum vertex is `start`
        let mut current = vec![start];
        let ext: Vec<VertexId> = g
            .neighbors(start)
            .iter()
            .copied()
            .filter(|&v| v > start)
            .collect();
        grow_subsets(g, start, &mut current, &ext, k, &mut out);
    }
    for s in &mut out {
        s.sort_unstable();
    }
    out.sort();
    out
}

fn grow_subsets(
    g: &Graph,
    start: VertexId,
    current: &mut Vec<VertexId>,
    ext: &[VertexId],
    k: usize,
    out: &mut Vec<Vec<VertexId>>,
) {
    out.push(current.clone());
    if current.len() == k {
        return;
    }
    for (i, &v) in ext.iter().enumerate() {
        let mut next_ext: Vec<VertexId> = ext[i + 1..].to_vec();
        for &w in g.neighbors(v) {
            if w > start && !current.contains(&w) && !ext[..=i].contains(&w) && !next_ext.contains(&w)
            {
                next_ext.push(w);
            }
        }
        current.push(v);
        grow_subsets(g, start, current, &next_ext, k, out);
        current.pop();
    }
}

/// Placements of the whole team on `support` with every vertex occupied.
pub fn positive_placements(support: &[VertexId], types: &RobotTypes) -> Vec<Configuration> {
    let mut per_type: Vec<Vec<Vec<u32>>> = Vec::new();
    for m in 0..types.len() {
        per_type.push(compositions(types.count(m), support.len()));
    }
    let mut out = Vec::new();
    let mut choice = vec![0usize; types.len()];
    loop {
        // combine current choice
        let mut totals = vec![0u32; support.len()];
        let mut entries = Vec::new();
        for (m, &ci) in choice.iter().enumerate() {
            for (i, &c) in per_type[m][ci].iter().enumerate() {
                totals[i] += c;
                if c > 0 {
                    entries.push((support[i], m, c));
                }
            }
        }
        if totals.iter().all(|&t| t > 0) {
            out.push(Configuration::from_entries(entries));
        }
        // advance odometer
        let mut pos = 0;
        loop {
            if pos == choice.len() {
                return out;
            }
            choice[pos] += 1;
            if choice[pos] < per_type[pos].len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Collapsibility
// ---------------------------------------------------------------------------

/// Representations of "contract edge {u, v}" as target configurations on
/// the formation's own pattern graph: the emptied endpoint's robots added
/// onto the kept one (both directions), plus every embedding of the
/// contracted pattern graph back into the original. Merging toward an
/// endpoint is not always embeddable (e.g. toward a star leaf), which is
/// why the shifted embeddings are included.
fn contraction_targets(f: &Formation, u: VertexId, v: VertexId) -> Vec<Configuration> {
    let mut out: Vec<Configuration> = Vec::new();
    for (a, b) in [(u, v), (v, u)] {
        let added_up = Configuration::from_entries(
            f.placement
                .entries()
                .iter()
                .map(|&(w, m, c)| if w == a { (b, m, c) } else { (w, m, c) }),
        );
        if !out.contains(&added_up) {
            out.push(added_up);
        }
    }
    let (cg, map) = f.graph.contract_edge(u, v).expect("edge exists");
    let cplacement = f.placement.mapped(&map);
    for_each_monomorphism(&cg, &f.graph, &vec![None; cg.n()], &mut |psi| {
        let shifted = cplacement.mapped(psi);
        if !out.contains(&shifted) {
            out.push(shifted);
        }
        ControlFlow::Continue(())
    });
    out
}

fn pair_in_transpositions(
    transpositions: &[Transposition],
    graph: &Graph,
    src: &Configuration,
    dst: &Configuration,
) -> bool {
    transpositions.iter().any(|t| {
        isomorphic_with_placements(graph, &[src, dst], &t.graph, &[&t.src, &t.dst])
            || isomorphic_with_placements(graph, &[src, dst], &t.graph, &[&t.dst, &t.src])
    })
}

/// Whether every formation may contract every pattern edge: for each edge,
/// some representation of the contraction on the pattern graph must be
/// present in the transposition set, up to pattern-graph isomorphism with
/// placement equality.
pub fn is_collapsible(lib: &FormationLibrary) -> bool {
    for f in &lib.formations {
        for (u, v) in f.graph.edges() {
            let found = contraction_targets(f, u, v).iter().any(|dst| {
                pair_in_transpositions(&lib.transpositions, &f.graph, &f.placement, dst)
            });
            if !found {
                return false;
            }
        }
    }
    true
}

/// Minimal superset of the library containing the contraction transpositions
/// of every formation (original and contracted alike), with contracted
/// formations appended to the formation set. Idempotent. Transpositions are
/// undirected, so reverses come for free.
pub fn collapsible_closure(lib: &FormationLibrary, types: &RobotTypes) -> FormationLibrary {
    let mut formations = lib.formations.clone();
    let mut transpositions = lib.transpositions.clone();
    let mut queue: Vec<usize> = (0..formations.len()).collect();
    while let Some(fid) = queue.pop() {
        let f = formations[fid].clone();
        for (u, v) in f.graph.edges() {
            let (cg, map) = f.graph.contract_edge(u, v).expect("edge exists");
            let cplacement = f.placement.mapped(&map);
            if !formations.iter().any(|g2| {
                isomorphic_with_placements(&cg, &[&cplacement], &g2.graph, &[&g2.placement])
            }) {
                formations.push(Formation {
                    name: format!("{}/c{}-{}", f.name, u, v),
                    graph: cg.clone(),
                    placement: cplacement.clone(),
                });
                queue.push(formations.len() - 1);
            }
            for dst in contraction_targets(&f, u, v) {
                if !moves_feasible(&f.graph, &f.placement, &dst) {
                    continue;
                }
                if pair_in_transpositions(&transpositions, &f.graph, &f.placement, &dst) {
                    continue;
                }
                // anchor the target in some formation of the extended set
                let mut anchor: Option<(usize, Vec<VertexId>)> = None;
                'search: for (gid, g2) in formations.iter().enumerate() {
                    if g2.placement.entries().len() != dst.entries().len() {
                        continue;
                    }
                    let mut hit = None;
                    for_each_monomorphism(&g2.graph, &f.graph, &vec![None; g2.graph.n()], &mut |m| {
                        if g2.placement.mapped(m) == dst {
                            hit = Some(m.to_vec());
                            return ControlFlow::Break(());
                        }
                        ControlFlow::Continue(())
                    });
                    if let Some(m) = hit {
                        anchor = Some((gid, m));
                        break 'search;
                    }
                }
                let Some((dst_formation, dst_map)) = anchor else {
                    continue;
                };
                let identity: Vec<VertexId> = (0..f.graph.n()).collect();
                transpositions.push(Transposition {
                    graph: f.graph.clone(),
                    src: f.placement.clone(),
                    dst,
                    src_formation: fid,
                    dst_formation,
                    src_map: identity,
                    dst_map,
                });
            }
        }
    }
    FormationLibrary::new(formations, transpositions, types)
        .expect("closure of a valid library is valid")
}

// ---------------------------------------------------------------------------
// Connectivity library generation
// ---------------------------------------------------------------------------

pub const CONNECTIVITY_K_BOUND: u32 = 4;

/// Connected graphs on `1..=max_n` vertices, one representative per
/// isomorphism class. Deduplication buckets by (vertex count, edge count,
/// degree sequence) and settles ties with a backtracking isomorphism test.
pub fn connected_graphs_up_to_iso(max_n: usize) -> Vec<Graph> {
    let mut all: Vec<Graph> = vec![Graph::new(1)];
    let mut last: Vec<Graph> = vec![Graph::new(1)];
    for n in 2..=max_n {
        let mut next: Vec<Graph> = Vec::new();
        let mut buckets: HashMap<(usize, Vec<usize>), Vec<usize>> = HashMap::new();
        for g in &last {
            // add vertex n-1 adjacent to every nonempty subset
            for subset in 1u32..(1 << g.n()) {
                let mut h = Graph::new(n);
                for (u, v) in g.edges() {
                    h.add_edge(u, v).unwrap();
                }
                for u in 0..g.n() {
                    if subset & (1 << u) != 0 {
                        h.add_edge(u, n - 1).unwrap();
                    }
                }
                let mut degs: Vec<usize> = (0..n).map(|v| h.degree(v)).collect();
                degs.sort_unstable();
                let key = (h.edge_count(), degs);
                let bucket = buckets.entry(key).or_default();
                let duplicate = bucket.iter().any(|&i| {
                    isomorphic_with_placements(&next[i], &[], &h, &[])
                });
                if !duplicate {
                    bucket.push(next.len());
                    next.push(h);
                }
            }
        }
        all.extend(next.iter().cloned());
        last = next;
    }
    all
}

/// Explicit encoding of the connectivity constraint as a formation library:
/// every connected shape on up to `k` vertices with every positive
/// placement, and every one-edge move between two such shapes.
pub fn generate_connectivity_library(
    types: &RobotTypes,
) -> Result<FormationLibrary, LibraryError> {
    let k = types.total();
    if k > CONNECTIVITY_K_BOUND {
        return Err(LibraryError::KOverBound {
            k,
            bound: CONNECTIVITY_K_BOUND,
        });
    }
    let k = k as usize;
    let shapes = connected_graphs_up_to_iso(k);
    let mut formations: Vec<Formation> = Vec::new();
    for g in &shapes {
        let support: Vec<VertexId> = (0..g.n()).collect();
        for placement in positive_placements(&support, types) {
            formations.push(Formation {
                name: format!("c{}v{}", g.n(), formations.len()),
                graph: g.clone(),
                placement,
            });
        }
    }

    let find_formation = |graph: &Graph, cfg: &Configuration| -> Option<(usize, Vec<VertexId>)> {
        for (fid, f) in formations.iter().enumerate() {
            if f.placement.entries().len() != cfg.entries().len() {
                continue;
            }
            let mut hit = None;
            for_each_monomorphism(&f.graph, graph, &vec![None; f.graph.n()], &mut |map| {
                if f.placement.mapped(map) == *cfg {
                    hit = Some(map.to_vec());
                    return ControlFlow::Break(());
                }
                ControlFlow::Continue(())
            });
            if let Some(map) = hit {
                return Some((fid, map));
            }
        }
        None
    };

    let mut transpositions: Vec<Transposition> = Vec::new();
    let mut buckets: HashMap<(usize, usize, Vec<(VertexId, TypeId, u32)>), Vec<usize>> =
        HashMap::new();
    let patterns = connected_graphs_up_to_iso(2 * k);
    for h in &patterns {
        let supports: Vec<Vec<VertexId>> = connected_subsets_up_to(h, k);
        for s1 in &supports {
            for s2 in &supports {
                let mut union: Vec<VertexId> = s1.iter().chain(s2.iter()).copied().collect();
                union.sort_unstable();
                union.dedup();
                if union.len() != h.n() {
                    continue; // pattern must be minimally supported
                }
                for src in &positive_placements(s1, types) {
                    for dst in &positive_placements(s2, types) {
                        if !moves_feasible(h, src, dst) {
                            continue;
                        }
                        let mut sig: Vec<(VertexId, TypeId, u32)> = Vec::new();
                        let mut a: Vec<_> = src.entries().iter().map(|&(_, m, c)| (0, m, c)).collect();
                        let mut b: Vec<_> = dst.entries().iter().map(|&(_, m, c)| (1, m, c)).collect();
                        a.sort_unstable();
                        b.sort_unstable();
                        if a <= b {
                            sig.extend(a);
                            sig.extend(b);
                        } else {
                            sig.extend(b);
                            sig.extend(a);
                        }
                        let key = (h.n(), h.edge_count(), sig);
                        let bucket = buckets.entry(key).or_default();
                        let dup = bucket.iter().any(|&i| {
                            let t = &transpositions[i];
                            isomorphic_with_placements(h, &[src, dst], &t.graph, &[&t.src, &t.dst])
                                || isomorphic_with_placements(
                                    h,
                                    &[src, dst],
                                    &t.graph,
                                    &[&t.dst, &t.src],
                                )
                        });
                        if dup {
                            continue;
                        }
                        let (sf, sm) = find_formation(h, src).expect("shape enumerated");
                        let (df, dm) = find_formation(h, dst).expect("shape enumerated");
                        bucket.push(transpositions.len());
                        transpositions.push(Transposition {
                            graph: h.clone(),
                            src: src.clone(),
                            dst: dst.clone(),
                            src_formation: sf,
                            dst_formation: df,
                            src_map: sm,
                            dst_map: dm,
                        });
                    }
                }
            }
        }
    }
    FormationLibrary::new(formations, transpositions, types)
}

// ---------------------------------------------------------------------------
// Regrouping
// ---------------------------------------------------------------------------

/// A valid transition sequence collapsing all robots onto `target`, built
/// by contracting pattern edges leaf-most first along a BFS tree rooted at
/// the target. At most one step per pattern edge; steps that would move no
/// robots are skipped.
pub fn regroup_sequence(
    backend: &ConstraintBackend,
    g: &Graph,
    types: &RobotTypes,
    a: &AnchoredConfiguration,
    target: VertexId,
) -> Result<Vec<AnchoredConfiguration>, LibraryError> {
    let active = a.active();
    if !active.contains(&target) {
        return Err(LibraryError::TargetNotActive { target });
    }
    if let ConstraintBackend::Explicit(lib) = backend {
        if !is_collapsible(lib) {
            return Err(LibraryError::NotCollapsible);
        }
    }
    // BFS over the active pattern (host-side) from the target
    let mut depth: HashMap<VertexId, usize> = HashMap::new();
    let mut parent: HashMap<VertexId, VertexId> = HashMap::new();
    depth.insert(target, 0);
    let mut queue = std::collections::VecDeque::from([target]);
    while let Some(u) = queue.pop_front() {
        let du = depth[&u];
        for &w in g.neighbors(u) {
            if active.contains(&w) && !depth.contains_key(&w) {
                depth.insert(w, du + 1);
                parent.insert(w, u);
                queue.push_back(w);
            }
        }
    }
    let mut order: Vec<VertexId> = active.iter().copied().filter(|&v| v != target).collect();
    debug_assert!(order.iter().all(|v| depth.contains_key(v)));
    order.sort_by_key(|v| std::cmp::Reverse((depth[v], *v)));

    let mut steps: Vec<AnchoredConfiguration> = Vec::new();
    let mut cur = a.config().clone();
    for v in order {
        if cur.robots_at(v) == 0 {
            continue;
        }
        let p = parent[&v];
        let next = Configuration::from_entries(
            cur.entries()
                .iter()
                .map(|&(w, m, c)| if w == v { (p, m, c) } else { (w, m, c) }),
        );
        if !backend.is_valid_transition(g, types, &cur, &next) {
            return Err(LibraryError::NotCollapsible);
        }
        let anchored = backend
            .anchor_config(g, types, &next)
            .ok_or(LibraryError::NotCollapsible)?;
        steps.push(anchored);
        cur = next;
    }
    debug_assert_eq!(cur.occupied(), vec![target]);
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, &(0..n - 1).map(|i| (i, i + 1)).collect::<Vec<_>>()).unwrap()
    }

    fn star(leaves: usize) -> Graph {
        Graph::from_edges(leaves + 1, &(1..=leaves).map(|i| (0, i)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn single_vertex_pattern_embeds_everywhere() {
        let p = Graph::new(1);
        let h = path(5);
        assert_eq!(find_monomorphisms(&p, &h, &[None]).len(), 5);
    }

    #[test]
    fn triangle_does_not_embed_in_tree() {
        let tri = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let t = path(6);
        assert!(find_monomorphisms(&tri, &t, &[None; 3]).is_empty());
    }

    #[test]
    fn monomorphism_count_matches_brute_force() {
        // brute force: all injective maps, filtered on edges
        fn brute(p: &Graph, h: &Graph) -> usize {
            fn perms(n: usize, k: usize) -> Vec<Vec<usize>> {
                let mut out = Vec::new();
                let mut cur = Vec::new();
                fn rec(n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
                    if cur.len() == k {
                        out.push(cur.clone());
                        return;
                    }
                    for v in 0..n {
                        if !cur.contains(&v) {
                            cur.push(v);
                            rec(n, k, cur, out);
                            cur.pop();
                        }
                    }
                }
                rec(n, k, &mut cur, &mut out);
                out
            }
            perms(h.n(), p.n())
                .into_iter()
                .filter(|map| p.edges().iter().all(|&(u, v)| h.has_edge(map[u], map[v])))
                .count()
        }
        let hosts = [path(5), star(4), Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap()];
        let pats = [path(2), path(3), star(3)];
        for h in &hosts {
            for p in &pats {
                let fast = find_monomorphisms(p, h, &vec![None; p.n()]).len();
                assert_eq!(fast, brute(p, h), "pattern/host mismatch");
            }
        }
    }

    #[test]
    fn pinned_search_respects_pin() {
        let p = path(2);
        let h = path(4);
        let maps = find_monomorphisms(&p, &h, &[Some(1), None]);
        assert!(maps.iter().all(|m| m[0] == 1));
        assert_eq!(maps.len(), 2); // 1-0 and 1-2
    }

    fn router_cleaner_types() -> RobotTypes {
        RobotTypes::new(vec![("router".into(), 1), ("cleaner".into(), 2)]).unwrap()
    }

    /// The router/cleaner example: a pair formation on an edge and a
    /// triangle formation, with the documented one-step move between them.
    fn beta_gamma() -> (RobotTypes, Formation, Formation, Transposition) {
        let types = router_cleaner_types();
        let beta = Formation {
            name: "beta".into(),
            graph: path(2),
            placement: Configuration::from_entries([(0, 0, 1), (1, 1, 2)]),
        };
        let gamma = Formation {
            name: "gamma".into(),
            graph: Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap(),
            placement: Configuration::from_entries([(0, 0, 1), (1, 1, 1), (2, 1, 1)]),
        };
        // pattern: u'=0, v'=1, w'=2, t'=3 with edges u'v', v'w', w't', v't'
        let tg = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (1, 3)]).unwrap();
        let trans = Transposition {
            graph: tg,
            src: Configuration::from_entries([(0, 0, 1), (1, 1, 2)]),
            dst: Configuration::from_entries([(1, 0, 1), (2, 1, 1), (3, 1, 1)]),
            src_formation: 0,
            dst_formation: 1,
            src_map: vec![0, 1],
            dst_map: vec![1, 2, 3],
        };
        (types, beta, gamma, trans)
    }

    #[test]
    fn beta_gamma_transposition_is_feasible() {
        let (_, _, _, t) = beta_gamma();
        assert!(validate_transposition(&t));
    }

    #[test]
    fn identity_transposition_is_feasible() {
        let f = Formation {
            name: "pair".into(),
            graph: path(2),
            placement: Configuration::from_entries([(0, 0, 1), (1, 0, 1)]),
        };
        let t = Transposition {
            graph: f.graph.clone(),
            src: f.placement.clone(),
            dst: f.placement.clone(),
            src_formation: 0,
            dst_formation: 0,
            src_map: vec![0, 1],
            dst_map: vec![0, 1],
        };
        assert!(validate_transposition(&t));
    }

    #[test]
    fn distance_two_swap_is_infeasible() {
        // two robots swapping across a 3-edge path in one step
        let g = path(4);
        let src = Configuration::from_entries([(0, 0, 1), (3, 1, 1)]);
        let dst = Configuration::from_entries([(3, 0, 1), (0, 1, 1)]);
        assert!(!moves_feasible(&g, &src, &dst));
    }

    #[test]
    fn mismatched_totals_are_infeasible() {
        let g = path(2);
        let src = Configuration::from_entries([(0, 0, 2)]);
        let dst = Configuration::from_entries([(1, 0, 1)]);
        assert!(!moves_feasible(&g, &src, &dst));
    }

    #[test]
    fn is_in_form_router_cleaner() {
        let (_, beta, _, _) = beta_gamma();
        let host = path(3);
        let cfg = Configuration::from_entries([(1, 0, 1), (2, 1, 2)]);
        let anchors = is_in_form(&cfg, &beta, &host, 0);
        assert_eq!(anchors.len(), 1);
        assert_eq!(anchors[0].active(), vec![1, 2]);
    }

    #[test]
    fn is_in_form_support_size_mismatch_is_empty() {
        let (_, beta, _, _) = beta_gamma();
        let host = path(3);
        let cfg = Configuration::from_entries([(0, 0, 1), (1, 1, 1), (2, 1, 1)]);
        assert!(is_in_form(&cfg, &beta, &host, 0).is_empty());
    }

    #[test]
    fn is_in_form_single_robot_everywhere() {
        let types = RobotTypes::homogeneous(1);
        let point = Formation {
            name: "pt".into(),
            graph: Graph::new(1),
            placement: Configuration::all_at(0, &types),
        };
        let host = star(3);
        let cfg = Configuration::all_at(2, &types);
        let anchors = is_in_form(&cfg, &point, &host, 0);
        assert_eq!(anchors.len(), 1);
        assert_eq!(anchors[0].active(), vec![2]);
    }

    #[test]
    fn fig7_transition_validates_under_explicit_backend() {
        let (types, beta, gamma, trans) = beta_gamma();
        let lib = FormationLibrary::new(vec![beta, gamma], vec![trans], &types).unwrap();
        // host: V = {a..h} = 0..8
        let host = Graph::from_edges(
            8,
            &[
                (0, 1),
                (1, 2),
                (1, 3),
                (2, 4),
                (2, 5),
                (3, 5),
                (4, 6),
                (4, 5),
                (5, 7),
            ],
        )
        .unwrap();
        let backend = ConstraintBackend::Explicit(lib);
        // beta at (b=1, c=2) -> gamma at (c=2, e=4, f=5)
        let a = Configuration::from_entries([(1, 0, 1), (2, 1, 2)]);
        let b = Configuration::from_entries([(2, 0, 1), (4, 1, 1), (5, 1, 1)]);
        assert!(backend.is_valid_transition(&host, &types, &a, &b));
        // removing the transposition flips the verdict
        let (types2, beta2, gamma2, _) = beta_gamma();
        let empty = ConstraintBackend::Explicit(
            FormationLibrary::new(vec![beta2, gamma2], vec![], &types2).unwrap(),
        );
        assert!(!empty.is_valid_transition(&host, &types2, &a, &b));
    }

    #[test]
    fn implicit_hold_and_disconnect() {
        let g = star(3);
        let types = RobotTypes::homogeneous(2);
        let backend = ConstraintBackend::ImplicitConnected;
        let a = Configuration::from_entries([(0, 0, 1), (1, 0, 1)]);
        assert!(backend.is_valid_transition(&g, &types, &a, &a));
        let split = Configuration::from_entries([(1, 0, 1), (2, 0, 1)]);
        assert!(!backend.is_valid_transition(&g, &types, &a, &split));
    }

    #[test]
    fn single_robot_successors_are_neighbors_plus_self() {
        let g = star(3);
        let types = RobotTypes::homogeneous(1);
        let backend = ConstraintBackend::ImplicitConnected;
        let a = AnchoredConfiguration::occupied_anchor(Configuration::all_at(0, &types));
        let succ = backend.enumerate_transitions(&g, &types, &a);
        let occ: Vec<Vec<usize>> = succ.iter().map(|s| s.config().occupied()).collect();
        assert_eq!(occ, vec![vec![0], vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn star_successors_match_brute_force() {
        let g = star(3);
        let types = RobotTypes::homogeneous(3);
        let backend = ConstraintBackend::ImplicitConnected;
        let a = AnchoredConfiguration::occupied_anchor(Configuration::all_at(0, &types));
        let succ = backend.enumerate_transitions(&g, &types, &a);
        // every output satisfies is_valid_transition
        for s in &succ {
            assert!(backend.is_valid_transition(&g, &types, a.config(), s.config()));
        }
        // brute force: all placements of 3 robots on <=1-edge targets of 0
        let mut expected = BTreeSet::new();
        for x in 0..4usize {
            for y in 0..4usize {
                for z in 0..4usize {
                    let cfg = Configuration::from_entries([
                        (x, 0usize, 1u32),
                        (y, 0, 1),
                        (z, 0, 1),
                    ]);
                    if g.is_connected_subset(&cfg.occupied()) {
                        expected.insert(cfg);
                    }
                }
            }
        }
        let got: BTreeSet<Configuration> = succ.iter().map(|s| s.config().clone()).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn connectivity_library_k1() {
        let types = RobotTypes::homogeneous(1);
        let lib = generate_connectivity_library(&types).unwrap();
        assert_eq!(lib.formations.len(), 1);
        // identity hold plus the move across an edge
        assert_eq!(lib.transpositions.len(), 2);
        assert!(is_collapsible(&lib));
    }

    #[test]
    fn connectivity_library_k2_formations() {
        let types = RobotTypes::homogeneous(2);
        let lib = generate_connectivity_library(&types).unwrap();
        // 2-at-point, and 1+1 on an edge
        let shapes: Vec<usize> = lib.formations.iter().map(|f| f.graph.n()).collect();
        assert_eq!(shapes.iter().filter(|&&n| n == 1).count(), 1);
        assert_eq!(shapes.iter().filter(|&&n| n == 2).count(), 1);
        assert!(is_collapsible(&lib));
    }

    #[test]
    fn connectivity_library_k3_shapes() {
        let types = RobotTypes::homogeneous(3);
        let lib = generate_connectivity_library(&types).unwrap();
        // point x3, edge (2,1) and (1,2), path (1,1,1), triangle (1,1,1)
        assert_eq!(lib.formations.len(), 5);
        let tri = lib
            .formations
            .iter()
            .find(|f| f.graph.n() == 3 && f.graph.edge_count() == 3)
            .unwrap();
        // the triangle shape never embeds into a tree
        assert!(find_monomorphisms(&tri.graph, &path(6), &[None; 3]).is_empty());
        assert!(is_collapsible(&lib));
    }

    #[test]
    fn two_vertex_formation_with_empty_p_is_not_collapsible() {
        let types = RobotTypes::homogeneous(2);
        let f = Formation {
            name: "pair".into(),
            graph: path(2),
            placement: Configuration::from_entries([(0, 0, 1), (1, 0, 1)]),
        };
        let lib = FormationLibrary::new(vec![f], vec![], &types).unwrap();
        assert!(!is_collapsible(&lib));
        let closed = collapsible_closure(&lib, &types);
        assert!(is_collapsible(&closed));
        // closure is idempotent
        let closed2 = collapsible_closure(&closed, &types);
        assert_eq!(closed2.formations.len(), closed.formations.len());
        assert_eq!(closed2.transpositions.len(), closed.transpositions.len());
    }

    #[test]
    fn closure_of_path3_adds_edge_and_point() {
        let types = RobotTypes::homogeneous(3);
        let f = Formation {
            name: "line".into(),
            graph: path(3),
            placement: Configuration::from_entries([(0, 0, 1), (1, 0, 1), (2, 0, 1)]),
        };
        let lib = FormationLibrary::new(vec![f], vec![], &types).unwrap();
        let closed = collapsible_closure(&lib, &types);
        // contracted shapes: 2-vertex (2,1)/(1,2) and the 3-point
        assert!(closed.formations.iter().any(|f| f.graph.n() == 2));
        assert!(closed.formations.iter().any(|f| f.graph.n() == 1));
        assert!(is_collapsible(&closed));
    }

    #[test]
    fn regroup_on_path3() {
        let g = path(3);
        let types = RobotTypes::homogeneous(3);
        let backend = ConstraintBackend::ImplicitConnected;
        let a = AnchoredConfiguration::occupied_anchor(Configuration::from_entries([
            (0, 0, 1),
            (1, 0, 1),
            (2, 0, 1),
        ]));
        let steps = regroup_sequence(&backend, &g, &types, &a, 1).unwrap();
        assert!(steps.len() <= 2); // at most |E_alpha|
        assert_eq!(steps.last().unwrap().config().occupied(), vec![1]);
        // already at target -> empty
        let at = AnchoredConfiguration::occupied_anchor(Configuration::all_at(1, &types));
        assert!(regroup_sequence(&backend, &g, &types, &at, 1)
            .unwrap()
            .is_empty());
        // target not active
        assert!(matches!(
            regroup_sequence(&backend, &g, &types, &at, 0),
            Err(LibraryError::TargetNotActive { .. })
        ));
    }

    #[test]
    fn transition_symmetry_implicit() {
        let g = path(4);
        let types = RobotTypes::homogeneous(2);
        let backend = ConstraintBackend::ImplicitConnected;
        let configs = enumerate_configs_touching(&backend, &g, &types, &[0, 1, 2, 3]);
        for a in &configs {
            for b in &configs {
                let fwd = backend.is_valid_transition(&g, &types, a.config(), b.config());
                let bwd = backend.is_valid_transition(&g, &types, b.config(), a.config());
                assert_eq!(fwd, bwd);
            }
        }
    }

    #[test]
    fn explicit_implicit_agree_on_small_graphs() {
        for (n, edges) in [
            (4usize, vec![(0, 1), (1, 2), (2, 3), (0, 2)]),
            (5, vec![(0, 1), (1, 2), (2, 3), (3, 4)]),
        ] {
            let g = Graph::from_edges(n, &edges).unwrap();
            for k in 1..=2u32 {
                let types = RobotTypes::homogeneous(k);
                let implicit = ConstraintBackend::ImplicitConnected;
                let explicit = ConstraintBackend::Explicit(
                    generate_connectivity_library(&types).unwrap(),
                );
                let all: Vec<usize> = (0..n).collect();
                let configs = enumerate_configs_touching(&implicit, &g, &types, &all);
                for a in &configs {
                    assert!(explicit.is_valid_config(&g, &types, a.config()));
                    let si: BTreeSet<Configuration> = implicit
                        .enumerate_transitions(&g, &types, a)
                        .into_iter()
                        .map(|s| s.config().clone())
                        .collect();
                    let se: BTreeSet<Configuration> = explicit
                        .enumerate_transitions(&g, &types, a)
                        .into_iter()
                        .map(|s| s.config().clone())
                        .collect();
                    assert_eq!(si, se, "successor sets differ for {:?}", a.config());
                }
            }
        }
    }

    #[test]
    fn successor_count_bound_holds() {
        // for a fixed active vertex, configurations activating it are
        // bounded by |F| * d^(max pattern size)
        let g = star(3);
        let types = RobotTypes::homogeneous(2);
        let lib = generate_connectivity_library(&types).unwrap();
        let stats = lib.stats();
        let backend = ConstraintBackend::Explicit(lib);
        for v in 0..g.n() {
            let configs = enumerate_configs_touching(&backend, &g, &types, &[v]);
            let bound = stats.formation_count
                * (g.max_degree() as usize).pow(stats.max_pattern_vertices as u32);
            assert!(configs.len() <= bound);
        }
    }
}
