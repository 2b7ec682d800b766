//! Exact optimal solver: breadth-first search over (configuration,
//! coverage-set) states, plus the repeated-transition splice used to
//! normalize traversals.

use std::collections::{HashMap, VecDeque};
use std::time::{Duration, Instant};

use crate::error::SolveError;
use crate::instance::{validate_traversal, Instance};
use crate::model::{AnchoredConfiguration, Configuration, Traversal};

pub const ORACLE_MAX_VERTICES: usize = 64;

#[derive(Debug, Clone, Default)]
pub struct SearchLimits {
    pub max_states: Option<usize>,
    pub max_millis: Option<u64>,
}

#[derive(Debug, Clone)]
pub enum SearchOutcome {
    Optimal(Traversal),
    Infeasible,
    /// The state or time cap was hit before the search space was exhausted;
    /// distinct from infeasibility.
    LimitExceeded,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub outcome: SearchOutcome,
    pub explored: usize,
    pub wall: Duration,
}

impl SearchResult {
    pub fn traversal(&self) -> Option<&Traversal> {
        match &self.outcome {
            SearchOutcome::Optimal(t) => Some(t),
            _ => None,
        }
    }

    pub fn optimal_time(&self) -> Option<usize> {
        self.traversal().map(|t| t.time())
    }
}

type StateKey = (Configuration, u64);

/// Provably minimal-time traversal from the start to the end configuration
/// covering every vertex, or infeasible, or limit-exceeded. Layered BFS
/// over (configuration, coverage mask); ties resolved by the deterministic
/// successor order.
pub fn solve_exact_bfs(inst: &Instance, limits: &SearchLimits) -> Result<SearchResult, SolveError> {
    let n = inst.graph.n();
    if n > ORACLE_MAX_VERTICES {
        return Err(SolveError::TooLarge {
            n,
            max: ORACLE_MAX_VERTICES,
        });
    }
    let start_time = Instant::now();
    let full: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let backend = &inst.backend;
    if !backend.is_valid_config(&inst.graph, &inst.robots, inst.start.config())
        || !backend.is_valid_config(&inst.graph, &inst.robots, inst.end.config())
    {
        return Err(SolveError::BadEndpoints);
    }

    let start_key: StateKey = (inst.start.config().clone(), inst.start.config().occupied_mask());
    let mut parents: HashMap<StateKey, (Option<StateKey>, AnchoredConfiguration)> = HashMap::new();
    parents.insert(start_key.clone(), (None, inst.start.clone()));
    let mut queue: VecDeque<StateKey> = VecDeque::from([start_key.clone()]);
    let mut explored = 0usize;

    let reconstruct = |parents: &HashMap<StateKey, (Option<StateKey>, AnchoredConfiguration)>,
                       goal: &StateKey|
     -> Traversal {
        let mut rev = Vec::new();
        let mut cur = Some(goal.clone());
        while let Some(key) = cur {
            let (prev, step) = parents.get(&key).expect("parent chain intact");
            rev.push(step.clone());
            cur = prev.clone();
        }
        rev.reverse();
        Traversal::new(rev).expect("nonempty path")
    };

    while let Some(key) = queue.pop_front() {
        explored += 1;
        if let Some(cap) = limits.max_states {
            if explored > cap {
                return Ok(SearchResult {
                    outcome: SearchOutcome::LimitExceeded,
                    explored,
                    wall: start_time.elapsed(),
                });
            }
        }
        if let Some(ms) = limits.max_millis {
            if start_time.elapsed().as_millis() as u64 > ms {
                return Ok(SearchResult {
                    outcome: SearchOutcome::LimitExceeded,
                    explored,
                    wall: start_time.elapsed(),
                });
            }
        }
        if key.1 == full && key.0 == *inst.end.config() {
            let traversal = reconstruct(&parents, &key);
            debug_assert!(validate_traversal(inst, &traversal).passed());
            return Ok(SearchResult {
                outcome: SearchOutcome::Optimal(traversal),
                explored,
                wall: start_time.elapsed(),
            });
        }
        let anchored = parents.get(&key).expect("queued states have parents").1.clone();
        for succ in backend.enumerate_transitions(&inst.graph, &inst.robots, &anchored) {
            let mask = key.1 | succ.config().occupied_mask();
            let skey: StateKey = (succ.config().clone(), mask);
            if !parents.contains_key(&skey) {
                parents.insert(skey.clone(), (Some(key.clone()), succ));
                queue.push_back(skey);
            }
        }
    }

    Ok(SearchResult {
        outcome: SearchOutcome::Infeasible,
        explored,
        wall: start_time.elapsed(),
    })
}

/// Earliest pair `i < i'` with equal configurations at `i, i'` and at
/// `i+1, i'+1` (anchors ignored), in lexicographic order.
pub fn find_repeated_transition(x: &Traversal) -> Option<(usize, usize)> {
    let t = x.time();
    for i in 0..t {
        for j in i + 1..t {
            if x.config(i) == x.config(j) && x.config(i + 1) == x.config(j + 1) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Splice out a repeated transition: keep the prefix through `i`, walk the
/// interior `i+1..i'` in reverse, and continue after `i'+1`. The result is
/// valid, covers the same configurations, and is exactly two transitions
/// shorter.
pub fn z_transform(x: &Traversal, i: usize, ip: usize) -> Result<Traversal, SolveError> {
    let t = x.time();
    let valid = i < ip
        && ip < t
        && x.config(i) == x.config(ip)
        && x.config(i + 1) == x.config(ip + 1);
    if !valid {
        return Err(SolveError::InvalidSplice { i, j: ip });
    }
    let steps = x.steps();
    let mut out: Vec<AnchoredConfiguration> = Vec::with_capacity(x.len() - 2);
    out.extend(steps[..=i].iter().cloned());
    out.extend(steps[i + 1..ip].iter().rev().cloned());
    out.extend(steps[ip + 2..].iter().cloned());
    let z = Traversal::new(out).expect("splice keeps the prefix");
    debug_assert_eq!(z.time(), x.time() - 2);
    Ok(z)
}

/// Apply the splice until no transition repeats. Terminates because each
/// round shortens the traversal by exactly two transitions.
pub fn normalize_traversal(x: &Traversal) -> Traversal {
    let mut cur = x.clone();
    while let Some((i, ip)) = find_repeated_transition(&cur) {
        cur = z_transform(&cur, i, ip).expect("detected pair is spliceable");
    }
    cur
}

/// The realized contradiction detector: on an optimal traversal a repeated
/// transition would yield a strictly shorter valid traversal. Returns true
/// when that happens (it must never fire on oracle output).
pub fn z_lemma_contradiction(inst: &Instance, x: &Traversal) -> bool {
    if let Some((i, ip)) = find_repeated_transition(x) {
        if let Ok(z) = z_transform(x, i, ip) {
            let report = validate_traversal(inst, &z);
            return report.passed() && z.time() < x.time();
        }
    }
    false
}
