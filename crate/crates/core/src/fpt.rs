//! Exact solver via dynamic programming over a nice tree decomposition.
//!
//! The state at a bag is a *condensed sequence*: the trace a traversal
//! leaves on the bag, with stretches spent wholly above or below the bag
//! collapsed to `Up`/`Down` markers and held repetitions merged. Tables
//! are filled leaves-up; each row keeps the cheapest way to cover
//! everything below the bag while projecting to that sequence, plus back
//! pointers for reconstruction.
//!
//! Tables materialize only rows of finite cost: the leaf table is `(Up)`,
//! and every other row is derived from child rows (arrow expansion at
//! introduce nodes, lifting at forget nodes, pairwise combination at join
//! nodes). Unreachable sequences would keep infinite cost in the textbook
//! formulation and can never contribute to the optimum, so they are never
//! created. Sequence generation prunes with transition-budget bounds that
//! hold for every projection of a traversal without repeated transitions,
//! which keeps optimal projections enumerable (they are projections of
//! repeat-free traversals).

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::decomp::{decompose_tree, make_nice, min_degree_decomposition, NiceTreeDecomposition, NodeKind};
use crate::error::SolveError;
use crate::formation::{connected_graphs_up_to_iso, enumerate_configs_touching, positive_placements, ConstraintBackend};
use crate::graph::{RootedTree, VertexId};
use crate::instance::{validate_traversal, Instance};
use crate::model::{Anchor, AnchoredConfiguration, Configuration, Traversal};
use crate::oracle::ORACLE_MAX_VERTICES;

/// One sequence element: a configuration symbol (by id) or an arrow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    Up,
    Down,
    Cfg(u32),
}

/// An interned anchored configuration: the count map plus the active set
/// the anchor witnesses. Symbols with equal maps but different active
/// sets are distinct; the representative anchor is carried for output.
#[derive(Debug, Clone)]
pub struct SymCfg {
    pub config_id: u32,
    pub act: Vec<VertexId>,
    pub act_mask: u64,
    pub anchor: Anchor,
}

#[derive(Debug, Clone, Default)]
pub struct FptBudget {
    /// Cumulative row cap across all tables.
    pub max_rows: Option<usize>,
}

impl FptBudget {
    pub fn capped(max_rows: usize) -> Self {
        FptBudget {
            max_rows: Some(max_rows),
        }
    }
}

pub const DEFAULT_MAX_ROWS: usize = 2_000_000;

/// Everything the solver precomputes once per instance.
pub struct FptContext<'a> {
    pub inst: &'a Instance,
    pub decomp: NiceTreeDecomposition,
    pub symbols: Vec<SymCfg>,
    pub configs: Vec<Configuration>,
    /// Sorted successor config ids per config id (valid transitions).
    pub succ: Vec<Vec<u32>>,
    pub symbols_of_config: Vec<Vec<u32>>,
    /// Per bag: (bag mask, up mask, down mask).
    pub bag_masks: Vec<(u64, u64, u64)>,
    pub start_config: u32,
    pub end_config: u32,
    /// Hard cap on condensed sequence length.
    pub length_cap: usize,
    /// The pigeonhole cap from the signature-length analysis.
    pub analysis_cap: u128,
}

fn mask_of(vs: &[VertexId]) -> u64 {
    let mut m = 0u64;
    for &v in vs {
        debug_assert!(v < 64);
        m |= 1 << v;
    }
    m
}

/// Number of formations and the largest pattern size of the connectivity
/// family for `types`, without materializing transpositions.
pub fn implicit_formation_stats(types: &crate::model::RobotTypes) -> (usize, usize) {
    let k = types.total() as usize;
    let mut count = 0usize;
    let mut max_v = 0usize;
    for g in connected_graphs_up_to_iso(k) {
        let support: Vec<VertexId> = (0..g.n()).collect();
        let c = positive_placements(&support, types).len();
        if c > 0 {
            count += c;
            max_v = max_v.max(g.n());
        }
    }
    (count, max_v)
}

/// The signature length bound `f * g * (tw + 1)`: `f` bounds the
/// configurations activating a fixed vertex, `g` bounds transitions in and
/// out of such a configuration. Unordered formation pairs are counted with
/// repetition so single-formation families get a positive bound.
pub fn signature_length_bound(
    formation_count: usize,
    max_pattern: usize,
    max_degree: usize,
    tw: usize,
) -> u128 {
    let d = max_degree.max(1) as u128;
    let fcount = formation_count as u128;
    let dmax = d.saturating_pow(max_pattern as u32);
    let f = fcount.saturating_mul(dmax);
    let pairs = fcount * fcount.saturating_sub(1) / 2 + fcount;
    let g = 2u128.saturating_mul(pairs).saturating_mul(dmax);
    f.saturating_mul(g).saturating_mul(tw as u128 + 1)
}

/// A cheap feasible tour used only to cap sequence lengths: the whole team
/// walks as one blob along a DFS tour of a spanning tree, then to the end
/// vertex. Available when both endpoints place all robots on one vertex
/// and blob moves validate under the backend.
pub fn heuristic_upper_bound(inst: &Instance) -> Option<usize> {
    let s = match inst.start.config().occupied().as_slice() {
        [v] => *v,
        _ => return None,
    };
    let f = match inst.end.config().occupied().as_slice() {
        [v] => *v,
        _ => return None,
    };
    let g = &inst.graph;
    let n = g.n();
    if n == 1 {
        return Some(0);
    }
    // BFS tree from s
    let mut parent = vec![usize::MAX; n];
    let mut order = vec![s];
    parent[s] = s;
    let mut qi = 0;
    while qi < order.len() {
        let u = order[qi];
        qi += 1;
        for &w in g.neighbors(u) {
            if parent[w] == usize::MAX {
                parent[w] = u;
                order.push(w);
            }
        }
    }
    if order.len() != n {
        return None; // disconnected
    }
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &v in &order {
        if v != s {
            children[parent[v]].push(v);
        }
    }
    // closed DFS tour over tree edges
    let mut tour = vec![s];
    fn walk(v: usize, children: &[Vec<usize>], tour: &mut Vec<usize>) {
        for &c in &children[v] {
            tour.push(c);
            walk(c, children, tour);
            tour.push(v);
        }
    }
    walk(s, &children, &mut tour);
    // then a shortest path s -> f
    if f != s {
        let mut prev = vec![usize::MAX; n];
        prev[s] = s;
        let mut q = std::collections::VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &w in g.neighbors(u) {
                if prev[w] == usize::MAX {
                    prev[w] = u;
                    q.push_back(w);
                }
            }
        }
        let mut path = vec![f];
        let mut cur = f;
        while cur != s {
            cur = prev[cur];
            path.push(cur);
        }
        path.reverse();
        tour.extend_from_slice(&path[1..]);
    }
    // validate blob steps under the backend
    let types = &inst.robots;
    let blob = |v: usize| Configuration::all_at(v, types);
    for w in tour.windows(2) {
        if !inst
            .backend
            .is_valid_transition(g, types, &blob(w[0]), &blob(w[1]))
        {
            return None;
        }
    }
    Some(tour.len() - 1)
}

/// Build the solve context: decomposition, symbol table, transition
/// relation, and length caps.
pub fn build_context(inst: &Instance) -> Result<FptContext<'_>, SolveError> {
    let n = inst.graph.n();
    if n > ORACLE_MAX_VERTICES {
        return Err(SolveError::TooLarge {
            n,
            max: ORACLE_MAX_VERTICES,
        });
    }
    let decomp = if let Some(raw) = &inst.decomposition {
        make_nice(raw, &inst.graph).map_err(|e| SolveError::BudgetExceeded {
            what: format!("bad decomposition: {e}"),
        })?
    } else if inst.graph.is_tree() {
        let t = RootedTree::new(inst.graph.clone(), inst.root.unwrap_or(0))
            .expect("tree checked");
        decompose_tree(&t)
    } else {
        let raw = min_degree_decomposition(&inst.graph);
        make_nice(&raw, &inst.graph).expect("heuristic output is valid")
    };

    // all valid anchored configurations anywhere on the host
    let all: Vec<VertexId> = (0..n).collect();
    let anchored = enumerate_configs_touching(&inst.backend, &inst.graph, &inst.robots, &all);
    let mut configs: Vec<Configuration> = Vec::new();
    let mut config_ids: HashMap<Configuration, u32> = HashMap::new();
    let mut symbols: Vec<SymCfg> = Vec::new();
    for a in &anchored {
        let cid = *config_ids.entry(a.config().clone()).or_insert_with(|| {
            configs.push(a.config().clone());
            (configs.len() - 1) as u32
        });
        let act = a.active();
        let act_mask = mask_of(&act);
        symbols.push(SymCfg {
            config_id: cid,
            act,
            act_mask,
            anchor: a.anchor().clone(),
        });
    }
    let mut symbols_of_config: Vec<Vec<u32>> = vec![Vec::new(); configs.len()];
    for (sid, s) in symbols.iter().enumerate() {
        symbols_of_config[s.config_id as usize].push(sid as u32);
    }
    let start_config = *config_ids
        .get(inst.start.config())
        .ok_or(SolveError::BadEndpoints)?;
    let end_config = *config_ids
        .get(inst.end.config())
        .ok_or(SolveError::BadEndpoints)?;

    // valid-transition relation over configs
    let mut succ: Vec<Vec<u32>> = vec![Vec::new(); configs.len()];
    for (i, rep) in symbols_of_config.iter().enumerate() {
        let a = AnchoredConfiguration::new(
            configs[i].clone(),
            symbols[rep[0] as usize].anchor.clone(),
        )
        .expect("interned anchor is consistent");
        let outs = inst
            .backend
            .enumerate_transitions(&inst.graph, &inst.robots, &a);
        let mut ids: Vec<u32> = outs
            .iter()
            .filter_map(|b| config_ids.get(b.config()).copied())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        succ[i] = ids;
    }

    let bag_masks = (0..decomp.len())
        .map(|j| {
            let b = mask_of(&decomp.bag(j).vertices);
            let up = mask_of(decomp.v_up(j).expect("bag id in range"));
            let down = mask_of(decomp.v_down(j).expect("bag id in range"));
            (b, up, down)
        })
        .collect();

    let (fcount, maxv) = match &inst.backend {
        ConstraintBackend::ImplicitConnected => implicit_formation_stats(&inst.robots),
        ConstraintBackend::Explicit(lib) => {
            let s = lib.stats();
            (s.formation_count, s.max_pattern_vertices)
        }
    };
    let analysis_cap =
        signature_length_bound(fcount, maxv, inst.graph.max_degree(), decomp.width());
    let tour_cap = heuristic_upper_bound(inst).map(|t| t + 1);
    let length_cap = tour_cap
        .map(|c| (c as u128).min(analysis_cap))
        .unwrap_or(analysis_cap)
        .min(usize::MAX as u128) as usize;

    Ok(FptContext {
        inst,
        decomp,
        symbols,
        configs,
        succ,
        symbols_of_config,
        bag_masks,
        start_config,
        end_config,
        length_cap,
        analysis_cap,
    })
}

impl<'a> FptContext<'a> {
    pub fn has_transition(&self, a: u32, b: u32) -> bool {
        self.succ[a as usize].binary_search(&b).is_ok()
    }

    fn config_has_anchor_within(&self, config: u32, region: u64) -> bool {
        self.symbols_of_config[config as usize]
            .iter()
            .any(|&sid| {
                let m = self.symbols[sid as usize].act_mask;
                m & !region == 0
            })
    }

    /// Number of distinct transition partners of `config` that admit an
    /// anchor wholly inside `region`. Transitions are symmetric, so this
    /// bounds both entries and exits.
    fn boundary_degree(&self, config: u32, region: u64) -> u32 {
        self.succ[config as usize]
            .iter()
            .filter(|&&d| self.config_has_anchor_within(d, region))
            .count() as u32
    }

    /// Intern a traversal step as a symbol id; the anchored configuration
    /// must be one of the enumerated valid anchorings.
    pub fn symbol_of(&self, step: &AnchoredConfiguration) -> Option<u32> {
        let act = mask_of(&step.active());
        let cid = self
            .configs
            .iter()
            .position(|c| c == step.config())? as u32;
        self.symbols_of_config[cid as usize]
            .iter()
            .copied()
            .find(|&sid| self.symbols[sid as usize].act_mask == act)
    }

    pub fn sym_config(&self, s: Sym) -> Option<u32> {
        match s {
            Sym::Cfg(id) => Some(self.symbols[id as usize].config_id),
            _ => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Projection, condensation, reduce, lift, combine
// ---------------------------------------------------------------------------

/// Classify each traversal step against bag `j`: the step itself when its
/// active set touches the bag, otherwise an arrow toward the side holding
/// the whole active set.
pub fn project(ctx: &FptContext, x: &Traversal, j: usize) -> Vec<Sym> {
    let (bag, up, _down) = ctx.bag_masks[j];
    x.steps()
        .iter()
        .map(|step| {
            let act = mask_of(&step.active());
            if act & bag != 0 {
                Sym::Cfg(ctx.symbol_of(step).expect("traversal steps are valid"))
            } else if act & !up == 0 {
                Sym::Up
            } else {
                debug_assert_eq!(act & !(ctx.bag_masks[j].2), 0, "active set straddles the separator");
                Sym::Down
            }
        })
        .collect()
}

/// Collapse consecutive repetitions of the same element.
pub fn condense(seq: &[Sym]) -> Vec<Sym> {
    let mut out: Vec<Sym> = Vec::with_capacity(seq.len());
    for &s in seq {
        if out.last() != Some(&s) {
            out.push(s);
        }
    }
    out
}

/// Turn every configuration symbol whose active set misses `keep` into
/// `Up`, then condense (the introduce-node child relation).
pub fn reduce(ctx: &FptContext, seq: &[Sym], keep: u64) -> Vec<Sym> {
    let mapped: Vec<Sym> = seq
        .iter()
        .map(|&s| match s {
            Sym::Cfg(id) if ctx.symbols[id as usize].act_mask & keep == 0 => Sym::Up,
            other => other,
        })
        .collect();
    condense(&mapped)
}

/// Turn every configuration symbol whose active set misses `keep` into
/// `Down`, then condense (the forget-node child relation).
pub fn lift(ctx: &FptContext, seq: &[Sym], keep: u64) -> Vec<Sym> {
    let mapped: Vec<Sym> = seq
        .iter()
        .map(|&s| match s {
            Sym::Cfg(id) if ctx.symbols[id as usize].act_mask & keep == 0 => Sym::Down,
            other => other,
        })
        .collect();
    condense(&mapped)
}

/// Join-node relation: `x` combines `y` and `z` when they agree on
/// configuration symbols and `Up`s, and every `Down` of `x` is `Down` on
/// exactly one side and `Up` on the other.
pub fn combines(x: &[Sym], y: &[Sym], z: &[Sym]) -> bool {
    if x.len() != y.len() || x.len() != z.len() {
        return false;
    }
    x.iter().zip(y.iter().zip(z.iter())).all(|(&a, (&b, &c))| match a {
        Sym::Cfg(_) | Sym::Up => a == b && a == c,
        Sym::Down => (b, c) == (Sym::Down, Sym::Up) || (b, c) == (Sym::Up, Sym::Down),
    })
}

// ---------------------------------------------------------------------------
// Sequence admissibility at a bag
// ---------------------------------------------------------------------------

/// Incremental constraint checker for condensed sequences at one bag.
/// All checks hold for the condensed projection of any traversal without
/// repeated transitions, so pruning with them never loses an optimal row:
/// arrows only exist when the corresponding region is nonempty, arrow
/// adjacencies consume distinct boundary transitions, and no ordered pair
/// of consecutive configurations repeats.
pub struct SeqChecker<'c, 'a> {
    ctx: &'c FptContext<'a>,
    bag_mask: u64,
    up_mask: u64,
    down_mask: u64,
    cap: usize,
    used_pairs: HashSet<(u32, u32)>,
    arrow_uses: HashMap<(u32, bool, bool), u32>,
    degree_cache: HashMap<(u32, bool), u32>,
    len: usize,
    last: Option<Sym>,
    first: Option<Sym>,
}

enum Undo {
    None,
    Pair(u32, u32),
    Arrow(u32, bool, bool),
}

impl<'c, 'a> SeqChecker<'c, 'a> {
    pub fn new(ctx: &'c FptContext<'a>, j: usize) -> Self {
        let (bag_mask, up_mask, down_mask) = ctx.bag_masks[j];
        SeqChecker {
            ctx,
            bag_mask,
            up_mask,
            down_mask,
            cap: ctx.length_cap,
            used_pairs: HashSet::new(),
            arrow_uses: HashMap::new(),
            degree_cache: HashMap::new(),
            len: 0,
            last: None,
            first: None,
        }
    }

    fn degree(&mut self, config: u32, up: bool) -> u32 {
        if let Some(&d) = self.degree_cache.get(&(config, up)) {
            return d;
        }
        let region = if up { self.up_mask } else { self.down_mask };
        let d = self.ctx.boundary_degree(config, region);
        self.degree_cache.insert((config, up), d);
        d
    }

    /// Try to append `s`; on success returns an undo token.
    fn push(&mut self, s: Sym) -> Option<Undo> {
        if self.len >= self.cap {
            return None;
        }
        let undo = match (self.last, s) {
            (Some(prev), cur) if prev == cur => return None, // not condensed
            (_, Sym::Up) if self.up_mask == 0 => return None,
            (_, Sym::Down) if self.down_mask == 0 => return None,
            (Some(Sym::Up), Sym::Down) | (Some(Sym::Down), Sym::Up) => return None,
            (Some(Sym::Cfg(p)), Sym::Cfg(q)) => {
                let (pc, qc) = (
                    self.ctx.symbols[p as usize].config_id,
                    self.ctx.symbols[q as usize].config_id,
                );
                if !self.ctx.has_transition(pc, qc) {
                    return None;
                }
                if !self.used_pairs.insert((pc, qc)) {
                    return None; // transition repeats
                }
                Undo::Pair(pc, qc)
            }
            (Some(arrow @ (Sym::Up | Sym::Down)), Sym::Cfg(q)) => {
                let qc = self.ctx.symbols[q as usize].config_id;
                let up = arrow == Sym::Up;
                let key = (qc, up, true);
                let used = self.arrow_uses.get(&key).copied().unwrap_or(0);
                if used + 1 > self.degree(qc, up) {
                    return None;
                }
                *self.arrow_uses.entry(key).or_insert(0) += 1;
                Undo::Arrow(qc, up, true)
            }
            (Some(Sym::Cfg(p)), arrow @ (Sym::Up | Sym::Down)) => {
                let pc = self.ctx.symbols[p as usize].config_id;
                let up = arrow == Sym::Up;
                let key = (pc, up, false);
                let used = self.arrow_uses.get(&key).copied().unwrap_or(0);
                if used + 1 > self.degree(pc, up) {
                    return None;
                }
                *self.arrow_uses.entry(key).or_insert(0) += 1;
                Undo::Arrow(pc, up, false)
            }
            (None, _) => Undo::None,
            _ => Undo::None,
        };
        if let Sym::Cfg(q) = s {
            // configuration symbols must touch the bag
            if self.ctx.symbols[q as usize].act_mask & self.bag_mask == 0 {
                self.unpush_undo(undo);
                return None;
            }
        }
        if self.first.is_none() {
            self.first = Some(s);
        }
        self.len += 1;
        self.last = Some(s);
        Some(undo)
    }

    fn unpush_undo(&mut self, undo: Undo) {
        match undo {
            Undo::None => {}
            Undo::Pair(a, b) => {
                self.used_pairs.remove(&(a, b));
            }
            Undo::Arrow(c, up, entering) => {
                let e = self.arrow_uses.get_mut(&(c, up, entering)).expect("pushed");
                *e -= 1;
            }
        }
    }

    fn pop(&mut self, undo: Undo, prev_last: Option<Sym>, was_first: bool) {
        self.unpush_undo(undo);
        self.len -= 1;
        self.last = prev_last;
        if was_first {
            self.first = None;
        }
    }
}

/// First/last symbol constraints induced by the fixed endpoints: the first
/// projection entry is the classification of the start configuration
/// (under some anchoring of it), symmetrically for the end.
fn allowed_boundary(ctx: &FptContext, j: usize, config: u32, s: Sym) -> bool {
    let (bag, up, down) = ctx.bag_masks[j];
    match s {
        Sym::Cfg(id) => ctx.symbols[id as usize].config_id == config
            && ctx.symbols[id as usize].act_mask & bag != 0,
        Sym::Up => ctx.config_has_anchor_within(config, up),
        Sym::Down => ctx.config_has_anchor_within(config, down),
    }
}

/// Full admissibility of a condensed sequence at bag `j` (the conditions a
/// table row must satisfy): equivalent to membership in the pattern
/// enumeration below.
pub fn pattern_admissible(ctx: &FptContext, j: usize, seq: &[Sym]) -> bool {
    if seq.is_empty() {
        return false;
    }
    let mut check = SeqChecker::new(ctx, j);
    for &s in seq {
        if check.push(s).is_none() {
            return false;
        }
    }
    allowed_boundary(ctx, j, ctx.start_config, seq[0])
        && allowed_boundary(ctx, j, ctx.end_config, *seq.last().unwrap())
}

/// The three structural conditions alone (symbol domain, no repeated
/// transition, consecutive validity), without realizability pruning.
pub fn satisfies_conditions(ctx: &FptContext, j: usize, seq: &[Sym]) -> bool {
    let (bag, _, _) = ctx.bag_masks[j];
    if condense(seq) != seq {
        return false;
    }
    let mut pairs = HashSet::new();
    for (i, &s) in seq.iter().enumerate() {
        if let Sym::Cfg(id) = s {
            if ctx.symbols[id as usize].act_mask & bag == 0 {
                return false;
            }
            if i + 1 < seq.len() {
                if let Sym::Cfg(id2) = seq[i + 1] {
                    let (a, b) = (
                        ctx.symbols[id as usize].config_id,
                        ctx.symbols[id2 as usize].config_id,
                    );
                    if !ctx.has_transition(a, b) {
                        return false;
                    }
                    if !pairs.insert((a, b)) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Exhaustively enumerate the admissible sequences at bag `j`, up to
/// `limit` outputs. Intended for small bags and for auditing; the solver
/// itself builds rows constructively from child tables.
pub fn enumerate_patterns(
    ctx: &FptContext,
    j: usize,
    limit: usize,
) -> Result<Vec<Vec<Sym>>, SolveError> {
    let mut sigma: Vec<Sym> = vec![Sym::Up, Sym::Down];
    let (bag, _, _) = ctx.bag_masks[j];
    for (sid, s) in ctx.symbols.iter().enumerate() {
        if s.act_mask & bag != 0 {
            sigma.push(Sym::Cfg(sid as u32));
        }
    }
    let mut out: Vec<Vec<Sym>> = Vec::new();
    let mut check = SeqChecker::new(ctx, j);
    let mut cur: Vec<Sym> = Vec::new();
    fn rec(
        ctx: &FptContext,
        j: usize,
        sigma: &[Sym],
        check: &mut SeqChecker,
        cur: &mut Vec<Sym>,
        out: &mut Vec<Vec<Sym>>,
        limit: usize,
    ) -> Result<(), SolveError> {
        if !cur.is_empty()
            && allowed_boundary(ctx, j, ctx.start_config, cur[0])
            && allowed_boundary(ctx, j, ctx.end_config, *cur.last().unwrap())
        {
            if out.len() >= limit {
                return Err(SolveError::BudgetExceeded {
                    what: format!("pattern enumeration at bag {j} exceeded {limit}"),
                });
            }
            out.push(cur.clone());
        }
        for &s in sigma {
            let prev_last = check.last;
            let was_first = check.first.is_none();
            if let Some(undo) = check.push(s) {
                cur.push(s);
                let r = rec(ctx, j, sigma, check, cur, out, limit);
                cur.pop();
                check.pop(undo, prev_last, was_first);
                r?;
            }
        }
        Ok(())
    }
    rec(ctx, j, &sigma, &mut check, &mut cur, &mut out, limit)?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ptr {
    None,
    One(usize),
    Two(usize, usize),
}

#[derive(Debug, Clone)]
pub struct Row {
    pub pattern: Vec<Sym>,
    pub cost: u64,
    pub ptr: Ptr,
}

#[derive(Debug, Default)]
pub struct BagTable {
    pub rows: Vec<Row>,
    index: HashMap<Vec<Sym>, usize>,
}

impl BagTable {
    fn upsert(&mut self, pattern: Vec<Sym>, cost: u64, ptr: Ptr) {
        match self.index.get(&pattern) {
            Some(&i) => {
                if cost < self.rows[i].cost {
                    self.rows[i].cost = cost;
                    self.rows[i].ptr = ptr;
                }
            }
            None => {
                self.index.insert(pattern.clone(), self.rows.len());
                self.rows.push(Row { pattern, cost, ptr });
            }
        }
    }

    pub fn find(&self, pattern: &[Sym]) -> Option<&Row> {
        self.index.get(pattern).map(|&i| &self.rows[i])
    }
}

pub struct Tables {
    pub per_bag: Vec<BagTable>,
    pub total_rows: usize,
}

/// Fill every bag table bottom-up.
pub fn update_all_tables(ctx: &FptContext, budget: &FptBudget) -> Result<Tables, SolveError> {
    let nbags = ctx.decomp.len();
    let mut per_bag: Vec<BagTable> = Vec::with_capacity(nbags);
    for _ in 0..nbags {
        per_bag.push(BagTable::default());
    }
    let mut total_rows = 0usize;
    let cap = budget.max_rows.unwrap_or(DEFAULT_MAX_ROWS);

    for &j in ctx.decomp.postorder() {
        let kind = ctx.decomp.bag(j).kind.clone();
        match kind {
            NodeKind::Leaf => {
                if pattern_admissible(ctx, j, &[Sym::Up]) {
                    per_bag[j].upsert(vec![Sym::Up], 0, Ptr::None);
                }
            }
            NodeKind::Introduce(_) => {
                let child = ctx.decomp.bag(j).children[0];
                let (bag, _, _) = ctx.bag_masks[j];
                let (cbag, _, _) = ctx.bag_masks[child];
                // symbols that touch the new vertex but not the child bag
                let fresh: Vec<Sym> = ctx
                    .symbols
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.act_mask & bag != 0 && s.act_mask & cbag == 0)
                    .map(|(sid, _)| Sym::Cfg(sid as u32))
                    .collect();
                let child_rows: Vec<(Vec<Sym>, u64, usize)> = per_bag[child]
                    .rows
                    .iter()
                    .enumerate()
                    .map(|(ri, r)| (r.pattern.clone(), r.cost, ri))
                    .collect();
                for (pattern, cost, ri) in child_rows {
                    expand_introduce(
                        ctx,
                        j,
                        &pattern,
                        &fresh,
                        cost,
                        ri,
                        &mut per_bag[j],
                        &mut total_rows,
                        cap,
                    )?;
                }
            }
            NodeKind::Forget(v) => {
                let child = ctx.decomp.bag(j).children[0];
                let (bag, _, _) = ctx.bag_masks[j];
                let child_rows: Vec<(Vec<Sym>, u64, usize)> = per_bag[child]
                    .rows
                    .iter()
                    .enumerate()
                    .map(|(ri, r)| (r.pattern.clone(), r.cost, ri))
                    .collect();
                for (pattern, cost, ri) in child_rows {
                    // coverage of the forgotten vertex is enforced here:
                    // some symbol of the child pattern must occupy it
                    let covers = pattern.iter().any(|&s| {
                        ctx.sym_config(s)
                            .map(|c| ctx.configs[c as usize].occupies(v))
                            .unwrap_or(false)
                    });
                    if !covers {
                        continue;
                    }
                    let lifted = lift(ctx, &pattern, bag);
                    let dropped = pattern
                        .iter()
                        .filter(|&&s| match s {
                            Sym::Cfg(id) => ctx.symbols[id as usize].act_mask & bag == 0,
                            _ => false,
                        })
                        .count() as u64;
                    if !pattern_admissible(ctx, j, &lifted) {
                        continue;
                    }
                    total_rows += 1;
                    if total_rows > cap {
                        return Err(SolveError::BudgetExceeded {
                            what: format!("table rows exceeded {cap}"),
                        });
                    }
                    per_bag[j].upsert(lifted, cost + dropped, Ptr::One(ri));
                }
            }
            NodeKind::Join => {
                let (l, r) = (
                    ctx.decomp.bag(j).children[0],
                    ctx.decomp.bag(j).children[1],
                );
                let mut right_index: HashMap<&[Sym], usize> = HashMap::new();
                for (ri, row) in per_bag[r].rows.iter().enumerate() {
                    right_index.insert(row.pattern.as_slice(), ri);
                }
                let mut inserts: Vec<(Vec<Sym>, u64, Ptr)> = Vec::new();
                for (li, lrow) in per_bag[l].rows.iter().enumerate() {
                    let ups: Vec<usize> = lrow
                        .pattern
                        .iter()
                        .enumerate()
                        .filter(|(_, &s)| s == Sym::Up)
                        .map(|(i, _)| i)
                        .collect();
                    // the right pattern agrees except that any subset of
                    // the left Ups may be Down on the right
                    for choice in 0u64..(1 << ups.len()) {
                        let mut candidate = lrow.pattern.clone();
                        for (bit, &pos) in ups.iter().enumerate() {
                            if choice & (1 << bit) != 0 {
                                candidate[pos] = Sym::Down;
                            }
                        }
                        // left Downs must be Up on the right
                        for s in candidate.iter_mut() {
                            if *s == Sym::Down && lrow.pattern[..].contains(&Sym::Down) {
                                // handled below by full rebuild
                            }
                        }
                        let rcand: Vec<Sym> = lrow
                            .pattern
                            .iter()
                            .zip(candidate.iter())
                            .map(|(&ls, &cs)| match ls {
                                Sym::Down => Sym::Up,
                                Sym::Up => cs,
                                other => other,
                            })
                            .collect();
                        let Some(&ri) = right_index.get(rcand.as_slice()) else {
                            continue;
                        };
                        let rrow = &per_bag[r].rows[ri];
                        // merged pattern: Down where either side is Down
                        let merged: Vec<Sym> = lrow
                            .pattern
                            .iter()
                            .zip(rcand.iter())
                            .map(|(&ls, &rs)| match (ls, rs) {
                                (Sym::Down, Sym::Up) | (Sym::Up, Sym::Down) => Sym::Down,
                                _ => ls,
                            })
                            .collect();
                        debug_assert!(combines(&merged, &lrow.pattern, &rrow.pattern));
                        if !pattern_admissible(ctx, j, &merged) {
                            continue;
                        }
                        inserts.push((merged, lrow.cost + rrow.cost, Ptr::Two(li, ri)));
                    }
                }
                for (pattern, cost, ptr) in inserts {
                    total_rows += 1;
                    if total_rows > cap {
                        return Err(SolveError::BudgetExceeded {
                            what: format!("table rows exceeded {cap}"),
                        });
                    }
                    per_bag[j].upsert(pattern, cost, ptr);
                }
            }
        }
        total_rows += 0;
    }
    Ok(Tables {
        per_bag,
        total_rows,
    })
}

/// Generate every admissible parent pattern whose reduction to the child
/// bag equals `child_pattern`: each `Up` of the child expands into a
/// nonempty condensed stretch over `Up` and the fresh symbols.
#[allow(clippy::too_many_arguments)]
fn expand_introduce(
    ctx: &FptContext,
    j: usize,
    child_pattern: &[Sym],
    fresh: &[Sym],
    cost: u64,
    child_row: usize,
    table: &mut BagTable,
    total_rows: &mut usize,
    cap: usize,
) -> Result<(), SolveError> {
    struct St<'c, 'a> {
        ctx: &'c FptContext<'a>,
        j: usize,
        fresh: Vec<Sym>,
        cur: Vec<Sym>,
        cost: u64,
        child_row: usize,
    }
    fn emit(
        st: &mut St,
        check: &mut SeqChecker,
        table: &mut BagTable,
        total: &mut usize,
        cap: usize,
    ) -> Result<(), SolveError> {
        if st.cur.is_empty()
            || !allowed_boundary(st.ctx, st.j, st.ctx.start_config, st.cur[0])
            || !allowed_boundary(st.ctx, st.j, st.ctx.end_config, *st.cur.last().unwrap())
        {
            return Ok(());
        }
        let _ = check;
        *total += 1;
        if *total > cap {
            return Err(SolveError::BudgetExceeded {
                what: format!("table rows exceeded {cap}"),
            });
        }
        table.upsert(st.cur.clone(), st.cost, Ptr::One(st.child_row));
        Ok(())
    }
    // walk the child pattern; at index i, either copy the symbol or (for
    // Up) inline a gap expansion
    fn walk(
        st: &mut St,
        check: &mut SeqChecker,
        rest: &[Sym],
        table: &mut BagTable,
        total: &mut usize,
        cap: usize,
    ) -> Result<(), SolveError> {
        match rest.split_first() {
            None => emit(st, check, table, total, cap),
            Some((&Sym::Up, tail)) => {
                // the gap is any nonempty condensed stretch over
                // {Up} U fresh; generate with the incremental checker
                gap(st, check, tail, true, table, total, cap)
            }
            Some((&s, tail)) => {
                let prev_last = check.last;
                let was_first = check.first.is_none();
                if let Some(undo) = check.push(s) {
                    st.cur.push(s);
                    let r = walk(st, check, tail, table, total, cap);
                    st.cur.pop();
                    check.pop(undo, prev_last, was_first);
                    r?;
                }
                Ok(())
            }
        }
    }
    // expansion of one child Up; `empty_so_far` tracks whether the gap has
    // produced at least one symbol
    fn gap(
        st: &mut St,
        check: &mut SeqChecker,
        tail: &[Sym],
        gap_empty: bool,
        table: &mut BagTable,
        total: &mut usize,
        cap: usize,
    ) -> Result<(), SolveError> {
        if !gap_empty {
            // the gap may close here and continue with the child pattern
            walk(st, check, tail, table, total, cap)?;
        }
        let options: Vec<Sym> = std::iter::once(Sym::Up)
            .chain(st.fresh.iter().copied())
            .collect();
        for s in options {
            let prev_last = check.last;
            let was_first = check.first.is_none();
            if let Some(undo) = check.push(s) {
                st.cur.push(s);
                let r = gap(st, check, tail, false, table, total, cap);
                st.cur.pop();
                check.pop(undo, prev_last, was_first);
                r?;
            }
        }
        Ok(())
    }

    let mut st = St {
        ctx,
        j,
        fresh: fresh.to_vec(),
        cur: Vec::new(),
        cost,
        child_row,
    };
    let mut check = SeqChecker::new(ctx, j);
    walk(&mut st, &mut check, child_pattern, table, total_rows, cap)
}

// ---------------------------------------------------------------------------
// Reconstruction
// ---------------------------------------------------------------------------

/// A condensed partial solution: the traversal trace at a bag with
/// everything below the bag explicit (no `Down` symbols).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialTraversal {
    pub bag: usize,
    pub syms: Vec<Sym>,
}

/// Maximal runs of below-bag configuration symbols, in order.
fn below_runs(ctx: &FptContext, bag_mask: u64, syms: &[Sym]) -> Vec<Vec<Sym>> {
    let mut runs = Vec::new();
    let mut cur: Option<Vec<Sym>> = None;
    for &s in syms {
        let is_below = matches!(s, Sym::Cfg(id) if ctx.symbols[id as usize].act_mask & bag_mask == 0);
        if is_below {
            cur.get_or_insert_with(Vec::new).push(s);
        } else if let Some(run) = cur.take() {
            runs.push(run);
        }
    }
    if let Some(run) = cur.take() {
        runs.push(run);
    }
    runs
}

/// Rebuild the partial solution for a finite-cost row by splicing child
/// reconstructions into the row's pattern. Rows that no traversal realizes
/// are detected by an arrow-count mismatch during expansion.
pub fn reconstruct(
    ctx: &FptContext,
    tables: &Tables,
    j: usize,
    row: usize,
) -> Result<PartialTraversal, SolveError> {
    let r = &tables.per_bag[j].rows[row];
    let infeasible = || SolveError::BudgetExceeded {
        what: format!("row {row} at bag {j} is not realizable"),
    };
    match ctx.decomp.bag(j).kind {
        NodeKind::Leaf => Ok(PartialTraversal {
            bag: j,
            syms: vec![Sym::Up],
        }),
        NodeKind::Introduce(_) => {
            let child = ctx.decomp.bag(j).children[0];
            let Ptr::One(ci) = r.ptr else {
                return Err(infeasible());
            };
            let sub = reconstruct(ctx, tables, child, ci)?;
            let (cbag, _, _) = ctx.bag_masks[child];
            let runs = below_runs(ctx, cbag, &sub.syms);
            let downs = r.pattern.iter().filter(|&&s| s == Sym::Down).count();
            if runs.len() != downs {
                return Err(infeasible());
            }
            let mut out = Vec::new();
            let mut next_run = runs.into_iter();
            for &s in &r.pattern {
                match s {
                    Sym::Down => out.extend(next_run.next().expect("counted")),
                    other => out.push(other),
                }
            }
            Ok(PartialTraversal { bag: j, syms: out })
        }
        NodeKind::Forget(_) => {
            let child = ctx.decomp.bag(j).children[0];
            let Ptr::One(ci) = r.ptr else {
                return Err(infeasible());
            };
            let sub = reconstruct(ctx, tables, child, ci)?;
            Ok(PartialTraversal {
                bag: j,
                syms: sub.syms,
            })
        }
        NodeKind::Join => {
            let (l, rr) = (
                ctx.decomp.bag(j).children[0],
                ctx.decomp.bag(j).children[1],
            );
            let Ptr::Two(li, ri) = r.ptr else {
                return Err(infeasible());
            };
            let left = reconstruct(ctx, tables, l, li)?;
            let right = reconstruct(ctx, tables, rr, ri)?;
            let (bag, _, _) = ctx.bag_masks[j];
            let lruns = below_runs(ctx, bag, &left.syms);
            let rruns = below_runs(ctx, bag, &right.syms);
            let lpat = &tables.per_bag[l].rows[li].pattern;
            let rpat = &tables.per_bag[rr].rows[ri].pattern;
            if lpat.len() != r.pattern.len() || rpat.len() != r.pattern.len() {
                return Err(infeasible());
            }
            let mut li_run = lruns.into_iter();
            let mut ri_run = rruns.into_iter();
            let mut out = Vec::new();
            for (i, &s) in r.pattern.iter().enumerate() {
                match s {
                    Sym::Down => {
                        if lpat[i] == Sym::Down {
                            out.extend(li_run.next().ok_or_else(infeasible)?);
                        } else {
                            out.extend(ri_run.next().ok_or_else(infeasible)?);
                        }
                    }
                    other => out.push(other),
                }
            }
            Ok(PartialTraversal { bag: j, syms: out })
        }
    }
}

// ---------------------------------------------------------------------------
// Partial traversals (test-side audits)
// ---------------------------------------------------------------------------

/// The condensed partial traversal of `x` at bag `j`: steps spent wholly
/// above the bag collapse to `Up`, everything else stays explicit.
pub fn partial_traversal(ctx: &FptContext, x: &Traversal, j: usize) -> PartialTraversal {
    let (_, up, _) = ctx.bag_masks[j];
    let raw: Vec<Sym> = x
        .steps()
        .iter()
        .map(|step| {
            let act = mask_of(&step.active());
            if act & !up == 0 {
                Sym::Up
            } else {
                Sym::Cfg(ctx.symbol_of(step).expect("traversal steps are valid"))
            }
        })
        .collect();
    PartialTraversal {
        bag: j,
        syms: condense(&raw),
    }
}

/// Number of configurations of a partial solution that have been forgotten
/// below the bag (active set disjoint from the bag).
pub fn partial_cost(ctx: &FptContext, p: &PartialTraversal) -> u64 {
    let (bag, _, _) = ctx.bag_masks[p.bag];
    p.syms
        .iter()
        .filter(|&&s| matches!(s, Sym::Cfg(id) if ctx.symbols[id as usize].act_mask & bag == 0))
        .count() as u64
}

// ---------------------------------------------------------------------------
// Solve
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct FptSolution {
    pub traversal: Traversal,
    pub root_cost: u64,
    pub total_rows: usize,
}

/// Optimal traversal via the table dynamic program. The minimal root cost
/// is the number of configurations of an optimal traversal; the returned
/// time is that count minus one.
pub fn solve_fpt(inst: &Instance, budget: &FptBudget) -> Result<FptSolution, SolveError> {
    let ctx = build_context(inst)?;
    let tables = update_all_tables(&ctx, budget)?;
    solve_from_tables(&ctx, &tables)
}

/// Pick the cheapest root row and expand it.
pub fn solve_from_tables(ctx: &FptContext, tables: &Tables) -> Result<FptSolution, SolveError> {
    let root = ctx.decomp.root();
    let table = &tables.per_bag[root];
    let mut best: Option<usize> = None;
    for (i, row) in table.rows.iter().enumerate() {
        if row.pattern.contains(&Sym::Up) {
            continue;
        }
        if best.map(|b| row.cost < table.rows[b].cost).unwrap_or(true) {
            best = Some(i);
        }
    }
    let Some(best) = best else {
        return Err(SolveError::Infeasible);
    };
    let partial = reconstruct(ctx, tables, root, best)?;
    let mut steps = Vec::with_capacity(partial.syms.len());
    for &s in &partial.syms {
        let Sym::Cfg(id) = s else {
            return Err(SolveError::Infeasible);
        };
        let sc = &ctx.symbols[id as usize];
        steps.push(
            AnchoredConfiguration::new(
                ctx.configs[sc.config_id as usize].clone(),
                sc.anchor.clone(),
            )
            .expect("interned symbols are consistent"),
        );
    }
    let traversal = Traversal::new(steps).map_err(|_| SolveError::Infeasible)?;
    debug_assert!(
        validate_traversal(ctx.inst, &traversal).passed(),
        "reconstructed traversal must validate"
    );
    Ok(FptSolution {
        root_cost: tables.per_bag[root].rows[best].cost,
        total_rows: tables.total_rows,
        traversal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formation::ConstraintBackend;
    use crate::graph::Graph;
    use crate::model::RobotTypes;
    use crate::oracle::{solve_exact_bfs, SearchLimits};

    fn tree_instance(edges: &[(usize, usize)], n: usize, k: u32, at: usize) -> Instance {
        let g = Graph::from_edges(n, edges).unwrap();
        let types = RobotTypes::homogeneous(k);
        let x0 = Configuration::all_at(at, &types);
        Instance::new(
            g,
            types,
            ConstraintBackend::ImplicitConnected,
            x0.clone(),
            x0,
        )
        .unwrap()
        .with_root(at)
    }

    fn path_instance(n: usize, k: u32) -> Instance {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        tree_instance(&edges, n, k, 0)
    }

    #[test]
    fn p2_single_robot_time_two() {
        let inst = path_instance(2, 1);
        let sol = solve_fpt(&inst, &FptBudget::default()).unwrap();
        assert_eq!(sol.traversal.time(), 2);
        assert_eq!(sol.root_cost, 3);
        assert!(validate_traversal(&inst, &sol.traversal).passed());
    }

    #[test]
    fn single_vertex_time_zero() {
        let g = Graph::new(1);
        let types = RobotTypes::homogeneous(2);
        let x0 = Configuration::all_at(0, &types);
        let inst = Instance::new(
            g,
            types,
            ConstraintBackend::ImplicitConnected,
            x0.clone(),
            x0,
        )
        .unwrap();
        let sol = solve_fpt(&inst, &FptBudget::default()).unwrap();
        assert_eq!(sol.traversal.time(), 0);
    }

    #[test]
    fn leaf_table_is_single_up_row() {
        let inst = path_instance(3, 1);
        let ctx = build_context(&inst).unwrap();
        let tables = update_all_tables(&ctx, &FptBudget::default()).unwrap();
        for (j, bag) in ctx.decomp.bags().iter().enumerate() {
            if matches!(bag.kind, NodeKind::Leaf) {
                assert_eq!(tables.per_bag[j].rows.len(), 1);
                assert_eq!(tables.per_bag[j].rows[0].pattern, vec![Sym::Up]);
                assert_eq!(tables.per_bag[j].rows[0].cost, 0);
            }
        }
    }

    #[test]
    fn root_rows_contain_no_up() {
        let inst = path_instance(4, 2);
        let ctx = build_context(&inst).unwrap();
        let tables = update_all_tables(&ctx, &FptBudget::default()).unwrap();
        let root = ctx.decomp.root();
        assert!(!tables.per_bag[root].rows.is_empty());
        for row in &tables.per_bag[root].rows {
            assert!(!row.pattern.contains(&Sym::Up));
        }
    }

    #[test]
    fn matches_oracle_on_small_trees() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(91);
        for trial in 0..15 {
            let n = rng.gen_range(2..=7);
            let mut g = Graph::new(n);
            let mut deg = vec![0usize; n];
            for v in 1..n {
                let mut p = rng.gen_range(0..v);
                let mut guard = 0;
                while deg[p] >= 3 && guard < 50 {
                    p = rng.gen_range(0..v);
                    guard += 1;
                }
                g.add_edge(p, v).unwrap();
                deg[p] += 1;
                deg[v] += 1;
            }
            let k = rng.gen_range(1..=3);
            let types = RobotTypes::homogeneous(k);
            let x0 = Configuration::all_at(0, &types);
            let inst = Instance::new(
                g,
                types,
                ConstraintBackend::ImplicitConnected,
                x0.clone(),
                x0,
            )
            .unwrap()
            .with_root(0);
            let oracle = solve_exact_bfs(&inst, &SearchLimits::default())
                .unwrap()
                .optimal_time()
                .unwrap();
            let sol = solve_fpt(&inst, &FptBudget::default()).unwrap();
            assert_eq!(sol.traversal.time(), oracle, "trial {trial} mismatch");
            assert!(validate_traversal(&inst, &sol.traversal).passed());
        }
    }

    #[test]
    fn infeasible_on_disconnected_graph() {
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        let types = RobotTypes::homogeneous(1);
        let x0 = Configuration::all_at(0, &types);
        let inst = Instance::new(
            g,
            types,
            ConstraintBackend::ImplicitConnected,
            x0.clone(),
            x0,
        )
        .unwrap();
        assert!(matches!(
            solve_fpt(&inst, &FptBudget::default()),
            Err(SolveError::Infeasible)
        ));
    }

    #[test]
    fn projection_of_degenerate_and_root_bags() {
        let inst = path_instance(3, 1);
        let ctx = build_context(&inst).unwrap();
        let x = solve_exact_bfs(&inst, &SearchLimits::default())
            .unwrap()
            .traversal()
            .unwrap()
            .clone();
        let root = ctx.decomp.root();
        let proj = condense(&project(&ctx, &x, root));
        assert_eq!(proj, vec![Sym::Down]);
    }

    #[test]
    fn projections_of_optima_satisfy_conditions_and_membership() {
        let inst = path_instance(4, 2);
        let ctx = build_context(&inst).unwrap();
        let x = solve_exact_bfs(&inst, &SearchLimits::default())
            .unwrap()
            .traversal()
            .unwrap()
            .clone();
        for j in 0..ctx.decomp.len() {
            let proj = condense(&project(&ctx, &x, j));
            assert!(satisfies_conditions(&ctx, j, &proj), "bag {j}");
            assert!(pattern_admissible(&ctx, j, &proj), "bag {j}");
            assert!(proj.len() as u128 <= ctx.analysis_cap);
        }
    }

    #[test]
    fn reduce_and_lift_consistency_on_projection() {
        let inst = path_instance(5, 2);
        let ctx = build_context(&inst).unwrap();
        let x = solve_exact_bfs(&inst, &SearchLimits::default())
            .unwrap()
            .traversal()
            .unwrap()
            .clone();
        for j in 0..ctx.decomp.len() {
            let bagj = ctx.decomp.bag(j);
            match bagj.kind {
                NodeKind::Introduce(_) => {
                    let c = bagj.children[0];
                    let pj = condense(&project(&ctx, &x, j));
                    let pc = condense(&project(&ctx, &x, c));
                    assert_eq!(reduce(&ctx, &pj, ctx.bag_masks[c].0), pc);
                }
                NodeKind::Forget(_) => {
                    let c = bagj.children[0];
                    let pj = condense(&project(&ctx, &x, j));
                    let pc = condense(&project(&ctx, &x, c));
                    assert_eq!(lift(&ctx, &pc, ctx.bag_masks[j].0), pj);
                }
                NodeKind::Join => {
                    let (l, r) = (bagj.children[0], bagj.children[1]);
                    let pj = condense(&project(&ctx, &x, j));
                    let pl = condense(&project(&ctx, &x, l));
                    let pr = condense(&project(&ctx, &x, r));
                    assert!(combines(&pj, &pl, &pr));
                }
                NodeKind::Leaf => {}
            }
            // lifting the partial reproduces the projection
            let part = partial_traversal(&ctx, &x, j);
            let lifted = lift(&ctx, &part.syms, ctx.bag_masks[j].0);
            assert_eq!(lifted, condense(&project(&ctx, &x, j)));
        }
    }

    #[test]
    fn reduce_identity_and_empty_cases() {
        let inst = path_instance(3, 1);
        let ctx = build_context(&inst).unwrap();
        let x = solve_exact_bfs(&inst, &SearchLimits::default())
            .unwrap()
            .traversal()
            .unwrap()
            .clone();
        let j = ctx.decomp.root();
        let proj = condense(&project(&ctx, &x, j));
        // keeping everything is the identity
        assert_eq!(reduce(&ctx, &proj, u64::MAX), proj);
        assert_eq!(lift(&ctx, &proj, u64::MAX), proj);
        // keeping nothing collapses config symbols to a single arrow
        let some_bag = (0..ctx.decomp.len())
            .find(|&j| !ctx.decomp.bag(j).vertices.is_empty())
            .unwrap();
        let p2 = condense(&project(&ctx, &x, some_bag));
        let reduced = reduce(&ctx, &p2, 0);
        assert!(reduced.iter().all(|&s| s == Sym::Up || s == Sym::Down));
    }

    #[test]
    fn combines_examples() {
        let a = vec![Sym::Cfg(0), Sym::Cfg(1)];
        assert!(combines(&a, &a, &a));
        let d = vec![Sym::Down];
        assert!(!combines(&d, &d, &d));
        let u = vec![Sym::Up];
        assert!(combines(&d, &d, &u));
        assert!(combines(&d, &u, &d));
    }

    #[test]
    fn enumerate_patterns_leaf_is_up_only() {
        let inst = path_instance(2, 1);
        let ctx = build_context(&inst).unwrap();
        let leaf = (0..ctx.decomp.len())
            .find(|&j| matches!(ctx.decomp.bag(j).kind, NodeKind::Leaf))
            .unwrap();
        let pats = enumerate_patterns(&ctx, leaf, 10_000).unwrap();
        assert!(pats.contains(&vec![Sym::Up]));
        // every pattern at an empty leaf bag is arrows only
        for p in &pats {
            assert!(p.iter().all(|&s| !matches!(s, Sym::Cfg(_))));
        }
    }

    /// Independent naive enumeration: generate all sequences over the bag
    /// alphabet up to a length cap and filter by the three structural
    /// conditions; the pruned enumeration must agree on that set after
    /// realizability filtering is disabled via superset check.
    #[test]
    fn enumerate_patterns_matches_naive_filter_on_tiny_bag() {
        let inst = path_instance(2, 1);
        let ctx = build_context(&inst).unwrap();
        // find the bag {v} above the leaf
        let j = (0..ctx.decomp.len())
            .find(|&j| ctx.decomp.bag(j).vertices.len() == 1 && matches!(ctx.decomp.bag(j).kind, NodeKind::Introduce(_)))
            .unwrap();
        let fast = enumerate_patterns(&ctx, j, 100_000).unwrap();
        let fast_set: BTreeSet<Vec<Sym>> = fast.into_iter().collect();
        // naive: all condensed sequences over the alphabet, length <= cap,
        // keeping conditions + realizability checked one by one
        let mut alphabet: Vec<Sym> = vec![Sym::Up, Sym::Down];
        for (sid, s) in ctx.symbols.iter().enumerate() {
            if s.act_mask & ctx.bag_masks[j].0 != 0 {
                alphabet.push(Sym::Cfg(sid as u32));
            }
        }
        let cap = 6usize.min(ctx.length_cap);
        let mut naive: BTreeSet<Vec<Sym>> = BTreeSet::new();
        let mut stack: Vec<Vec<Sym>> = alphabet.iter().map(|&s| vec![s]).collect();
        while let Some(seq) = stack.pop() {
            if pattern_admissible(&ctx, j, &seq) {
                naive.insert(seq.clone());
            }
            if seq.len() < cap {
                for &s in &alphabet {
                    let mut next = seq.clone();
                    next.push(s);
                    stack.push(next);
                }
            }
        }
        let fast_short: BTreeSet<Vec<Sym>> = fast_set
            .iter()
            .filter(|p| p.len() <= cap)
            .cloned()
            .collect();
        assert_eq!(fast_short, naive);
        // and every admissible sequence satisfies the bare conditions
        for p in &fast_short {
            assert!(satisfies_conditions(&ctx, j, p));
        }
    }

    #[test]
    fn table_cost_matches_partial_cost_of_optimum() {
        let inst = path_instance(4, 1);
        let ctx = build_context(&inst).unwrap();
        let tables = update_all_tables(&ctx, &FptBudget::default()).unwrap();
        let x = solve_exact_bfs(&inst, &SearchLimits::default())
            .unwrap()
            .traversal()
            .unwrap()
            .clone();
        for j in 0..ctx.decomp.len() {
            let proj = condense(&project(&ctx, &x, j));
            let row = tables.per_bag[j]
                .find(&proj)
                .unwrap_or_else(|| panic!("optimal projection missing at bag {j}"));
            let part = partial_traversal(&ctx, &x, j);
            assert!(row.cost <= partial_cost(&ctx, &part), "bag {j}");
        }
        // at the root the minimal cost equals the configuration count
        let root = ctx.decomp.root();
        let best = tables.per_bag[root]
            .rows
            .iter()
            .map(|r| r.cost)
            .min()
            .unwrap();
        assert_eq!(best, x.time() as u64 + 1);
    }

    #[test]
    fn budget_exceeded_reported() {
        let inst = path_instance(5, 2);
        let res = solve_fpt(&inst, &FptBudget::capped(3));
        assert!(matches!(res, Err(SolveError::BudgetExceeded { .. })));
    }

    #[test]
    fn explicit_backend_on_tw2_graph_matches_oracle() {
        use crate::formation::generate_connectivity_library;
        let g = Graph::from_edges(5, &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (3, 4), (2, 4)])
            .unwrap();
        let types = RobotTypes::homogeneous(2);
        let lib = generate_connectivity_library(&types).unwrap();
        let x0 = Configuration::all_at(0, &types);
        let raw = min_degree_decomposition(&g);
        let inst = Instance::new(
            g,
            types,
            ConstraintBackend::Explicit(lib),
            x0.clone(),
            x0,
        )
        .unwrap()
        .with_decomposition(raw);
        let oracle = solve_exact_bfs(&inst, &SearchLimits::default())
            .unwrap()
            .optimal_time()
            .unwrap();
        let sol = solve_fpt(&inst, &FptBudget::default()).unwrap();
        assert_eq!(sol.traversal.time(), oracle);
    }
}
