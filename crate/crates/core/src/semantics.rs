//! Concrete configuration-graph semantics and bounded explicit-state oracles.
//!
//! A configuration stores the leader state, the memory value and how many
//! contributors sit in each contributor state. Contributors are
//! interchangeable, so a count vector loses nothing over per-thread state
//! vectors. The oracles explore the graph for a fixed number `t` of
//! contributors in deterministic BFS order; a positive answer is always
//! backed by a replayable trace.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitSet;
use crate::graph::scc_ids;
use crate::model::{Interface, MemOp, StateId, Symbol, System};

/// Default bound on explored configurations per oracle query.
pub const DEFAULT_MAX_CONFIGURATIONS: usize = 1_000_000;

/// Environment variable overriding [`DEFAULT_MAX_CONFIGURATIONS`].
pub const MAX_STATES_ENV: &str = "LCS_MAX_STATES";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("inconclusive: explored more than {cap} configurations")]
    Inconclusive { cap: usize },
    #[error("contributor count must be at least {min}, got {t}")]
    TooFewContributors { t: usize, min: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Limits {
    pub max_configurations: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_configurations: DEFAULT_MAX_CONFIGURATIONS,
        }
    }
}

impl Limits {
    /// Defaults, with `LCS_MAX_STATES` applied when set to a number.
    pub fn from_env() -> Self {
        let max_configurations = std::env::var(MAX_STATES_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(DEFAULT_MAX_CONFIGURATIONS);
        Limits { max_configurations }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration {
    pub leader: StateId,
    pub memory: Symbol,
    /// Number of contributors in each contributor state.
    pub counts: Vec<u32>,
}

impl Configuration {
    /// The initial configuration with `t` contributors.
    pub fn initial(sys: &System, t: usize) -> Self {
        let mut counts = vec![0; sys.contributor().state_count()];
        counts[sys.contributor().initial()] = t as u32;
        Configuration {
            leader: sys.leader().initial(),
            memory: sys.initial_value(),
            counts,
        }
    }

    /// Occupied contributor states.
    pub fn support(&self) -> BitSet {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(p, _)| p)
            .collect()
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Actor {
    Leader,
    Contributor,
}

/// One transition of the configuration graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Step {
    pub actor: Actor,
    pub from: StateId,
    pub op: MemOp,
    pub to: StateId,
}

fn apply(c: &Configuration, step: &Step) -> Option<Configuration> {
    let memory = match step.op {
        MemOp::Eps => c.memory,
        MemOp::Write(b) => b,
        MemOp::Read(a) if a == c.memory => c.memory,
        MemOp::Read(_) => return None,
    };
    match step.actor {
        Actor::Leader => (c.leader == step.from).then(|| Configuration {
            leader: step.to,
            memory,
            counts: c.counts.clone(),
        }),
        Actor::Contributor => {
            if c.counts.get(step.from).copied().unwrap_or(0) == 0 || step.to >= c.counts.len() {
                return None;
            }
            let mut counts = c.counts.clone();
            counts[step.from] -= 1;
            counts[step.to] += 1;
            Some(Configuration {
                leader: c.leader,
                memory,
                counts,
            })
        }
    }
}

/// All one-step successors of `c`, sorted by step.
pub fn successors(sys: &System, c: &Configuration) -> Vec<(Step, Configuration)> {
    let mut out = Vec::new();
    for &(op, to) in sys.leader().outgoing(c.leader) {
        let step = Step {
            actor: Actor::Leader,
            from: c.leader,
            op,
            to,
        };
        if let Some(next) = apply(c, &step) {
            out.push((step, next));
        }
    }
    for p in c.support() {
        for &(op, to) in sys.contributor().outgoing(p) {
            let step = Step {
                actor: Actor::Contributor,
                from: p,
                op,
                to,
            };
            if let Some(next) = apply(c, &step) {
                out.push((step, next));
            }
        }
    }
    out.sort_by_key(|a| a.0);
    out
}

/// Replay `steps` from `start`; `None` if some step is not enabled.
pub fn replay(start: &Configuration, steps: &[Step]) -> Option<Configuration> {
    steps.iter().try_fold(start.clone(), |c, s| apply(&c, s))
}

pub fn matches_interface(c: &Configuration, i: &Interface) -> bool {
    c.support() == i.contributors && c.leader == i.leader && c.memory == i.memory
}

/// Explicit reachable graph, nodes numbered in BFS discovery order.
struct Explored {
    nodes: Vec<Configuration>,
    edges: Vec<Vec<(Step, usize)>>,
    parent: Vec<Option<(usize, Step)>>,
}

impl Explored {
    fn path_to(&self, mut node: usize) -> Vec<Step> {
        let mut steps = Vec::new();
        while let Some((prev, step)) = self.parent[node] {
            steps.push(step);
            node = prev;
        }
        steps.reverse();
        steps
    }
}

fn explore(
    sys: &System,
    start: &Configuration,
    within: Option<BitSet>,
    limits: &Limits,
    mut stop_at: impl FnMut(&Configuration) -> bool,
) -> Result<(Explored, Option<usize>), OracleError> {
    let mut g = Explored {
        nodes: vec![start.clone()],
        edges: vec![Vec::new()],
        parent: vec![None],
    };
    let mut index: HashMap<Configuration, usize> = HashMap::new();
    index.insert(start.clone(), 0);
    if stop_at(start) {
        return Ok((g, Some(0)));
    }
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        let current = g.nodes[u].clone();
        for (step, next) in successors(sys, &current) {
            if within.is_some_and(|s| !next.support().is_subset(s)) {
                continue;
            }
            let v = match index.get(&next) {
                Some(&v) => v,
                None => {
                    if g.nodes.len() >= limits.max_configurations {
                        return Err(OracleError::Inconclusive {
                            cap: limits.max_configurations,
                        });
                    }
                    let v = g.nodes.len();
                    index.insert(next.clone(), v);
                    g.nodes.push(next.clone());
                    g.edges.push(Vec::new());
                    g.parent.push(Some((u, step)));
                    if stop_at(&next) {
                        g.edges[u].push((step, v));
                        return Ok((g, Some(v)));
                    }
                    queue.push_back(v);
                    v
                }
            };
            g.edges[u].push((step, v));
        }
    }
    Ok((g, None))
}

fn check_t(t: usize, min: usize) -> Result<(), OracleError> {
    if t < min {
        Err(OracleError::TooFewContributors { t, min })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReachResult {
    pub found: bool,
    pub trace: Option<Vec<Step>>,
    pub explored: usize,
}

/// Is a configuration whose leader state lies in `targets` reachable from
/// the initial configuration with `t` contributors?
pub fn bounded_reach_oracle(
    sys: &System,
    targets: BitSet,
    t: usize,
    limits: &Limits,
) -> Result<ReachResult, OracleError> {
    check_t(t, 1)?;
    let start = Configuration::initial(sys, t);
    let (g, hit) = explore(sys, &start, None, limits, |c| targets.contains(c.leader))?;
    Ok(ReachResult {
        found: hit.is_some(),
        trace: hit.map(|v| g.path_to(v)),
        explored: g.nodes.len(),
    })
}

/// A lasso: a prefix from the initial configuration to `knot`, then a
/// nonempty cycle from `knot` back to itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LassoCertificate {
    pub prefix: Vec<Step>,
    pub cycle: Vec<Step>,
    pub knot: Configuration,
}

impl LassoCertificate {
    /// Replays both parts with `t` contributors and checks the knot is final.
    pub fn validate(&self, sys: &System, t: usize) -> bool {
        let start = Configuration::initial(sys, t);
        !self.cycle.is_empty()
            && sys.final_states().contains(self.knot.leader)
            && replay(&start, &self.prefix).as_ref() == Some(&self.knot)
            && replay(&self.knot, &self.cycle).as_ref() == Some(&self.knot)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LiveResult {
    pub found: bool,
    pub certificate: Option<LassoCertificate>,
    pub explored: usize,
}

/// Shortest nonempty path from `node` back to itself inside its component.
fn shortest_cycle(g: &Explored, comp: &[usize], node: usize) -> Option<Vec<Step>> {
    let mut parent: HashMap<usize, (usize, Step)> = HashMap::new();
    let mut queue = VecDeque::from([node]);
    let mut seen = vec![false; g.nodes.len()];
    while let Some(u) = queue.pop_front() {
        for &(step, v) in &g.edges[u] {
            if comp[v] != comp[node] {
                continue;
            }
            if v == node {
                let mut steps = vec![step];
                let mut cur = u;
                while cur != node {
                    let (prev, s) = parent[&cur];
                    steps.push(s);
                    cur = prev;
                }
                steps.reverse();
                return Some(steps);
            }
            if !seen[v] {
                seen[v] = true;
                parent.insert(v, (u, step));
                queue.push_back(v);
            }
        }
    }
    None
}

/// Does the reachable graph with `t` contributors contain a cycle through
/// a configuration whose leader state is final?
pub fn bounded_live_oracle(
    sys: &System,
    t: usize,
    limits: &Limits,
) -> Result<LiveResult, OracleError> {
    check_t(t, 1)?;
    let start = Configuration::initial(sys, t);
    let (g, _) = explore(sys, &start, None, limits, |_| false)?;
    let comp = scc_ids(
        g.nodes.len(),
        g.edges
            .iter()
            .enumerate()
            .flat_map(|(u, out)| out.iter().map(move |&(_, v)| (u, v))),
    );
    for (v, c) in g.nodes.iter().enumerate() {
        if !sys.final_states().contains(c.leader) {
            continue;
        }
        if let Some(cycle) = shortest_cycle(&g, &comp, v) {
            let cert = LassoCertificate {
                prefix: g.path_to(v),
                cycle,
                knot: c.clone(),
            };
            debug_assert!(cert.validate(sys, t));
            return Ok(LiveResult {
                found: true,
                certificate: Some(cert),
                explored: g.nodes.len(),
            });
        }
    }
    Ok(LiveResult {
        found: false,
        certificate: None,
        explored: g.nodes.len(),
    })
}

/// All count vectors over `states` with every entry positive summing to `t`.
fn compositions(n_states: usize, states: &[StateId], t: usize) -> Vec<Vec<u32>> {
    fn go(states: &[StateId], left: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        match states {
            [] => {}
            [last] => {
                if left >= 1 {
                    cur[*last] = left as u32;
                    out.push(cur.clone());
                    cur[*last] = 0;
                }
            }
            [first, rest @ ..] => {
                for k in 1..=left.saturating_sub(rest.len()) {
                    cur[*first] = k as u32;
                    go(rest, left - k, cur, out);
                }
                cur[*first] = 0;
            }
        }
    }
    let mut out = Vec::new();
    go(states, t, &mut vec![0; n_states], &mut out);
    out
}

/// Is there, for `t` contributors, a configuration matching `iface` that
/// lies on a nonempty cycle all of whose configurations keep their
/// contributors inside `iface.contributors`?
pub fn bounded_saturated_cycle_oracle(
    sys: &System,
    iface: &Interface,
    t: usize,
    limits: &Limits,
) -> Result<bool, OracleError> {
    check_t(t, iface.contributors.len().max(1))?;
    let states: Vec<StateId> = iface.contributors.iter().collect();
    let mut budget = *limits;
    for counts in compositions(sys.contributor().state_count(), &states, t) {
        let start = Configuration {
            leader: iface.leader,
            memory: iface.memory,
            counts,
        };
        let (g, _) = explore(sys, &start, Some(iface.contributors), &budget, |_| false)?;
        if g.edges.iter().any(|out| out.iter().any(|&(_, v)| v == 0)) {
            return Ok(true);
        }
        budget.max_configurations = budget
            .max_configurations
            .checked_sub(g.nodes.len())
            .filter(|&n| n > 0)
            .ok_or(OracleError::Inconclusive {
                cap: limits.max_configurations,
            })?;
    }
    Ok(false)
}
