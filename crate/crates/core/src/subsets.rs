//! Reachability by saturation over abstract states `(S, q, a)`.
//!
//! `S` is the set of contributor states seen so far. Once a contributor
//! state has been reached, arbitrarily many contributors can be parked
//! there, so moving out of `p` never removes `p` from `S`. The table is the
//! least set of abstract states closed under the abstract successor
//! relation, rooted at `({q0_C}, q0_L, a0)`.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::bits::BitSet;
use crate::model::{Interface, MemOp, StateId, Symbol, System};
use crate::semantics::{Actor, Step};

/// A node of the saturation graph. Same shape as an interface.
pub type AbstractState = Interface;

#[derive(Debug, Clone)]
pub struct ReachTable {
    entries: BTreeMap<BitSet, BTreeSet<(StateId, Symbol)>>,
    order: Vec<AbstractState>,
    provenance: HashMap<AbstractState, (AbstractState, Step)>,
    bound: u128,
}

impl ReachTable {
    /// `S -> {(q, a)}`.
    pub fn entries(&self) -> &BTreeMap<BitSet, BTreeSet<(StateId, Symbol)>> {
        &self.entries
    }

    pub fn contains(&self, s: &AbstractState) -> bool {
        self.entries
            .get(&s.contributors)
            .is_some_and(|e| e.contains(&(s.leader, s.memory)))
    }

    /// Abstract states in discovery (BFS) order.
    pub fn states(&self) -> &[AbstractState] {
        &self.order
    }

    /// Number of abstract states explored.
    pub fn explored(&self) -> usize {
        self.order.len()
    }

    /// The `2^C * L * D` bound on explored states.
    pub fn bound(&self) -> u128 {
        self.bound
    }

    /// Abstract steps from the root to `s` along first-discovery links.
    pub fn trace_to(&self, s: &AbstractState) -> Option<Vec<(Step, AbstractState)>> {
        if !self.contains(s) {
            return None;
        }
        let mut out = Vec::new();
        let mut cur = *s;
        while let Some(&(prev, step)) = self.provenance.get(&cur) {
            out.push((step, cur));
            cur = prev;
        }
        out.reverse();
        Some(out)
    }
}

fn state_bound(sys: &System) -> u128 {
    let c = sys.contributor().state_count() as u32;
    (1u128 << c) * sys.leader().state_count() as u128 * sys.domain_size() as u128
}

fn abstract_successors(sys: &System, s: &AbstractState) -> Vec<(Step, AbstractState)> {
    let memory_after = |op: MemOp| match op {
        MemOp::Eps => Some(s.memory),
        MemOp::Read(a) => (a == s.memory).then_some(a),
        MemOp::Write(b) => Some(b),
    };
    let mut out = Vec::new();
    for &(op, to) in sys.leader().outgoing(s.leader) {
        if let Some(memory) = memory_after(op) {
            let step = Step {
                actor: Actor::Leader,
                from: s.leader,
                op,
                to,
            };
            out.push((
                step,
                Interface {
                    contributors: s.contributors,
                    leader: to,
                    memory,
                },
            ));
        }
    }
    for p in s.contributors {
        for &(op, to) in sys.contributor().outgoing(p) {
            if let Some(memory) = memory_after(op) {
                let step = Step {
                    actor: Actor::Contributor,
                    from: p,
                    op,
                    to,
                };
                out.push((
                    step,
                    Interface {
                        contributors: s.contributors.with(to),
                        leader: s.leader,
                        memory,
                    },
                ));
            }
        }
    }
    out
}

/// Saturate the abstract transition relation from the initial state.
pub fn saturate_abstract(sys: &System) -> ReachTable {
    let root = Interface {
        contributors: BitSet::singleton(sys.contributor().initial()),
        leader: sys.leader().initial(),
        memory: sys.initial_value(),
    };
    let mut tbl = ReachTable {
        entries: BTreeMap::new(),
        order: vec![root],
        provenance: HashMap::new(),
        bound: state_bound(sys),
    };
    tbl.entries
        .entry(root.contributors)
        .or_default()
        .insert((root.leader, root.memory));
    let mut queue = VecDeque::from([root]);
    while let Some(s) = queue.pop_front() {
        for (step, next) in abstract_successors(sys, &s) {
            let fresh = tbl
                .entries
                .entry(next.contributors)
                .or_default()
                .insert((next.leader, next.memory));
            if fresh {
                tbl.provenance.insert(next, (s, step));
                tbl.order.push(next);
                queue.push_back(next);
            }
        }
    }
    assert!(
        (tbl.order.len() as u128) <= tbl.bound,
        "explored {} abstract states, bound is {}",
        tbl.order.len(),
        tbl.bound
    );
    tbl
}

#[derive(Debug, Clone, Serialize)]
pub struct LcrResult {
    pub reachable: bool,
    /// First final abstract state in discovery order.
    pub interface: Option<Interface>,
    /// Abstract steps leading to `interface`.
    pub trace: Vec<(Step, AbstractState)>,
    pub explored: usize,
}

/// Is some leader final state reachable, for some number of contributors?
pub fn lcr_subsets(sys: &System) -> LcrResult {
    let tbl = saturate_abstract(sys);
    lcr_from_table(sys, &tbl)
}

pub fn lcr_from_table(sys: &System, tbl: &ReachTable) -> LcrResult {
    let hit = tbl
        .states()
        .iter()
        .find(|s| sys.final_states().contains(s.leader))
        .copied();
    LcrResult {
        reachable: hit.is_some(),
        interface: hit,
        trace: hit.and_then(|s| tbl.trace_to(&s)).unwrap_or_default(),
        explored: tbl.explored(),
    }
}

/// All table entries as interfaces, optionally only those at leader states
/// in `restrict_final`.
pub fn interfaces_from_table(
    tbl: &ReachTable,
    restrict_final: Option<BitSet>,
) -> BTreeSet<Interface> {
    tbl.entries
        .iter()
        .flat_map(|(&contributors, e)| {
            e.iter().map(move |&(leader, memory)| Interface {
                contributors,
                leader,
                memory,
            })
        })
        .filter(|i| restrict_final.is_none_or(|f| f.contains(i.leader)))
        .collect()
}
