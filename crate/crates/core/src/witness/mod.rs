//! Reachability through short witnesses.
//!
//! A witness sketches a leader run together with the positions at which
//! contributors supply each new value for the first time. Valid witnesses
//! are built order by order: a valid witness of order `k + 1` is a valid
//! one of order `k` followed by an order-1 piece, with the leader loops cut
//! out again so that only repetition-free (short) witnesses are stored.
//!
//! The engine works on a normalised copy of the leader:
//!
//! * a fresh pre-initial state writes the initial value and moves to the
//!   initial state, so reads of the initial value look like reads of a
//!   leader write;
//! * a write `p -!a-> q` followed by ε-moves and reads of `a` is
//!   short-circuited to `p -!a-> r`, since the leader may read back its own
//!   write before anyone else moves.

mod table;
mod validity;
mod word;

use thiserror::Error;

use crate::bits::{subsets, BitSet};
use crate::model::{Automaton, MemOp, ModelError, StateId, System, Transition};

pub use table::{
    interfaces_from_witness_table, lcr_witness, lcr_witness_from_table, valid_short_table,
    valid_short_table_with_cap, LcrWitnessResult, ShortValidTable, StratumStats, TableStats,
    DEFAULT_ENTRY_CAP,
};
pub use word::{concat, short_concat, FirstWriteSeq, Witness};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WitnessError {
    #[error("malformed witness: {0}")]
    Malformed(String),
    #[error("cannot concatenate: target {target} differs from init {init}")]
    Mismatch { target: StateId, init: StateId },
    #[error("first-write sequence has length {beta}, witness has order {order}")]
    LengthMismatch { beta: usize, order: usize },
    #[error("first-write index {index} out of range for order {order}")]
    IndexOutOfRange { index: usize, order: usize },
    #[error("witness table exceeds {cap} entries")]
    Capacity { cap: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A system prepared for the witness engine.
#[derive(Debug, Clone)]
pub struct Engine<'a> {
    sys: &'a System,
    leader: Automaton,
    pre: StateId,
    /// `Loop(q, Γ)` for every `q` and every `Γ`, when the domain is small.
    loops: Option<Vec<Vec<BitSet>>>,
    /// Contributor states with an outgoing write of each symbol.
    writers: Vec<BitSet>,
    contrib_succ: Successors,
}

/// Contributor successor sets by kind of operation.
#[derive(Debug, Clone)]
struct Successors {
    eps: Vec<BitSet>,
    /// Targets of writes of any value.
    write: Vec<BitSet>,
    read: Vec<Vec<BitSet>>,
}

impl Successors {
    fn new(sys: &System) -> Self {
        let c = sys.contributor();
        let n = c.state_count();
        let mut out = Successors {
            eps: vec![BitSet::EMPTY; n],
            write: vec![BitSet::EMPTY; n],
            read: vec![vec![BitSet::EMPTY; sys.domain_size()]; n],
        };
        for t in c.transitions() {
            match t.op {
                MemOp::Eps => out.eps[t.from].insert(t.to),
                MemOp::Write(_) => out.write[t.from].insert(t.to),
                MemOp::Read(a) => out.read[t.from][a].insert(t.to),
            };
        }
        out
    }
}

/// Domains up to this size get a precomputed `Loop` table.
const LOOP_TABLE_MAX_DOMAIN: usize = 10;

impl<'a> Engine<'a> {
    pub fn new(sys: &'a System) -> Result<Self, WitnessError> {
        let l = sys.leader();
        let pre = l.state_count();
        let mut names = l.state_names().to_vec();
        names.push(format!("^{}", l.state_name(l.initial())));
        let mut edges: Vec<Transition> = l.transitions().to_vec();
        edges.push(Transition::new(
            pre,
            MemOp::Write(sys.initial_value()),
            l.initial(),
        ));
        let mut closure = Vec::new();
        for t in &edges {
            let MemOp::Write(a) = t.op else { continue };
            let mut seen = BitSet::singleton(t.to);
            let mut stack = vec![t.to];
            while let Some(q) = stack.pop() {
                for &(op, r) in l.outgoing(q) {
                    if (op == MemOp::Eps || op == MemOp::Read(a)) && seen.insert(r) {
                        closure.push(Transition::new(t.from, t.op, r));
                        stack.push(r);
                    }
                }
            }
        }
        edges.extend(closure);
        let leader = Automaton::new("leader", names, l.initial(), edges)?;
        let loops = (sys.domain_size() <= LOOP_TABLE_MAX_DOMAIN).then(|| {
            (0..leader.state_count())
                .map(|q| {
                    subsets(sys.domain())
                        .map(|g| validity::loop_set_of(&leader, q, g))
                        .collect()
                })
                .collect()
        });
        let mut writers = vec![BitSet::EMPTY; sys.domain_size()];
        for t in sys.contributor().transitions() {
            if let MemOp::Write(b) = t.op {
                writers[b].insert(t.from);
            }
        }
        Ok(Engine {
            sys,
            leader,
            pre,
            loops,
            writers,
            contrib_succ: Successors::new(sys),
        })
    }

    pub fn system(&self) -> &'a System {
        self.sys
    }

    /// The normalised leader, states `0..L` plus [`Engine::pre_initial`].
    pub fn leader(&self) -> &Automaton {
        &self.leader
    }

    /// The synthetic state writing the initial value.
    pub fn pre_initial(&self) -> StateId {
        self.pre
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::parse_system;

    #[test]
    fn pre_state_writes_initial_value() {
        let s = sys1();
        let e = Engine::new(&s).unwrap();
        assert_eq!(e.pre_initial(), 2);
        assert!(e.leader().has_transition(2, MemOp::Write(0), 0));
        assert_eq!(e.leader().outgoing(2).len(), 1);
    }

    #[test]
    fn self_read_is_short_circuited() {
        let s = parse_system(
            "system { domain = [x, y] init = x
               leader { init = q0 q0 -> q1 : !y q1 -> q2 : eps q2 -> q3 : ?y q3 -> q4 : ?y q3 -> q5 : ?x }
               contributor { init = c0 } }",
        )
        .unwrap();
        let e = Engine::new(&s).unwrap();
        let st = |n: &str| s.leader_state(n).unwrap();
        for r in ["q1", "q2", "q3", "q4"] {
            assert!(
                e.leader().has_transition(st("q0"), MemOp::Write(1), st(r)),
                "{r}"
            );
        }
        assert!(!e
            .leader()
            .has_transition(st("q0"), MemOp::Write(1), st("q5")));
        // q0 only reads y, which the initial write does not provide.
        let s1 = sys2();
        let e1 = Engine::new(&s1).unwrap();
        assert!(!e1.leader().has_transition(2, MemOp::Write(0), 1));
    }
}
