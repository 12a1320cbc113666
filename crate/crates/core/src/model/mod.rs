//! Leader/contributor systems: one leader automaton and arbitrarily many
//! copies of a contributor automaton sharing a single memory cell.
//!
//! States and symbols are dense indices; human-readable names live in side
//! tables and are only consulted for parsing and printing.

mod text;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{BitSet, MAX_BITS};

pub use text::{parse_system, serialize_system, ParseError};

/// Index into the data domain.
pub type Symbol = usize;

/// Index of a leader or contributor state.
pub type StateId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("empty domain")]
    EmptyDomain,
    #[error("{what} has {count} entries, at most {MAX_BITS} are supported")]
    TooLarge { what: &'static str, count: usize },
    #[error("{0} has no states")]
    NoStates(&'static str),
    #[error("{role}: state index {index} out of range")]
    StateOutOfRange { role: &'static str, index: usize },
    #[error("symbol index {0} out of range")]
    SymbolOutOfRange(usize),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("invalid interface: {0}")]
    BadInterface(String),
}

/// A memory operation labelling a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum MemOp {
    Eps,
    Read(Symbol),
    Write(Symbol),
}

impl MemOp {
    pub fn symbol(self) -> Option<Symbol> {
        match self {
            MemOp::Eps => None,
            MemOp::Read(a) | MemOp::Write(a) => Some(a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Transition {
    pub from: StateId,
    pub to: StateId,
    pub op: MemOp,
}

impl Transition {
    pub fn new(from: StateId, op: MemOp, to: StateId) -> Self {
        Transition { from, to, op }
    }
}

/// A finite automaton over memory operations.
///
/// Transitions are kept sorted and duplicate-free, so two automata with the
/// same transition set compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automaton {
    state_names: Vec<String>,
    initial: StateId,
    transitions: Vec<Transition>,
    outgoing: Vec<Vec<(MemOp, StateId)>>,
}

impl Automaton {
    pub fn new(
        role: &'static str,
        state_names: Vec<String>,
        initial: StateId,
        transitions: impl IntoIterator<Item = Transition>,
    ) -> Result<Self, ModelError> {
        let n = state_names.len();
        if n == 0 {
            return Err(ModelError::NoStates(role));
        }
        if n > MAX_BITS {
            return Err(ModelError::TooLarge {
                what: role,
                count: n,
            });
        }
        check_unique(&state_names)?;
        if initial >= n {
            return Err(ModelError::StateOutOfRange {
                role,
                index: initial,
            });
        }
        let mut transitions: Vec<Transition> = transitions.into_iter().collect();
        for t in &transitions {
            for index in [t.from, t.to] {
                if index >= n {
                    return Err(ModelError::StateOutOfRange { role, index });
                }
            }
        }
        transitions.sort();
        transitions.dedup();
        let mut outgoing = vec![Vec::new(); n];
        for t in &transitions {
            outgoing[t.from].push((t.op, t.to));
        }
        for out in &mut outgoing {
            out.sort();
        }
        Ok(Automaton {
            state_names,
            initial,
            transitions,
            outgoing,
        })
    }

    pub fn state_count(&self) -> usize {
        self.state_names.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Outgoing `(op, target)` pairs of `state`, sorted.
    pub fn outgoing(&self, state: StateId) -> &[(MemOp, StateId)] {
        &self.outgoing[state]
    }

    pub fn has_transition(&self, from: StateId, op: MemOp, to: StateId) -> bool {
        self.outgoing[from].binary_search(&(op, to)).is_ok()
    }

    pub fn state_name(&self, state: StateId) -> &str {
        &self.state_names[state]
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn state_index(&self, name: &str) -> Option<StateId> {
        self.state_names.iter().position(|n| n == name)
    }

    pub fn all_states(&self) -> BitSet {
        BitSet::full(self.state_count())
    }

    /// A copy with a different transition relation, same states.
    pub fn with_transitions(
        &self,
        transitions: impl IntoIterator<Item = Transition>,
    ) -> Result<Self, ModelError> {
        Automaton::new(
            "automaton",
            self.state_names.clone(),
            self.initial,
            transitions,
        )
    }
}

fn check_unique(names: &[String]) -> Result<(), ModelError> {
    let mut seen = std::collections::HashSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(ModelError::DuplicateName(n.clone()));
        }
    }
    Ok(())
}

/// A leader/contributor system together with the leader's final states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct System {
    symbols: Vec<String>,
    initial_value: Symbol,
    leader: Automaton,
    contributor: Automaton,
    final_states: BitSet,
}

impl System {
    pub fn new(
        symbols: Vec<String>,
        initial_value: Symbol,
        leader: Automaton,
        contributor: Automaton,
        final_states: BitSet,
    ) -> Result<Self, ModelError> {
        if symbols.is_empty() {
            return Err(ModelError::EmptyDomain);
        }
        if symbols.len() > MAX_BITS {
            return Err(ModelError::TooLarge {
                what: "domain",
                count: symbols.len(),
            });
        }
        check_unique(&symbols)?;
        if initial_value >= symbols.len() {
            return Err(ModelError::SymbolOutOfRange(initial_value));
        }
        for t in leader.transitions().iter().chain(contributor.transitions()) {
            if let Some(a) = t.op.symbol() {
                if a >= symbols.len() {
                    return Err(ModelError::SymbolOutOfRange(a));
                }
            }
        }
        if !final_states.is_subset(leader.all_states()) {
            let index = final_states
                .difference(leader.all_states())
                .first()
                .unwrap_or(0);
            return Err(ModelError::StateOutOfRange {
                role: "leader",
                index,
            });
        }
        Ok(System {
            symbols,
            initial_value,
            leader,
            contributor,
            final_states,
        })
    }

    /// Same system, different final states.
    pub fn with_final_states(&self, final_states: BitSet) -> Result<Self, ModelError> {
        System::new(
            self.symbols.clone(),
            self.initial_value,
            self.leader.clone(),
            self.contributor.clone(),
            final_states,
        )
    }

    /// Same system with final states given by name.
    pub fn with_final_names(&self, names: &[&str]) -> Result<Self, ModelError> {
        let mut f = BitSet::EMPTY;
        for n in names {
            f.insert(self.leader_state(n)?);
        }
        self.with_final_states(f)
    }

    pub fn domain_size(&self) -> usize {
        self.symbols.len()
    }

    pub fn domain(&self) -> BitSet {
        BitSet::full(self.symbols.len())
    }

    pub fn initial_value(&self) -> Symbol {
        self.initial_value
    }

    pub fn leader(&self) -> &Automaton {
        &self.leader
    }

    pub fn contributor(&self) -> &Automaton {
        &self.contributor
    }

    pub fn final_states(&self) -> BitSet {
        self.final_states
    }

    pub fn symbol_names(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol_name(&self, a: Symbol) -> &str {
        &self.symbols[a]
    }

    pub fn symbol(&self, name: &str) -> Result<Symbol, ModelError> {
        self.symbols
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| ModelError::UnknownSymbol(name.to_string()))
    }

    pub fn leader_state(&self, name: &str) -> Result<StateId, ModelError> {
        self.leader
            .state_index(name)
            .ok_or_else(|| ModelError::UnknownState(name.to_string()))
    }

    pub fn contributor_state(&self, name: &str) -> Result<StateId, ModelError> {
        self.contributor
            .state_index(name)
            .ok_or_else(|| ModelError::UnknownState(name.to_string()))
    }

    pub fn contributor_set(&self, names: &[&str]) -> Result<BitSet, ModelError> {
        names.iter().map(|n| self.contributor_state(n)).collect()
    }

    pub fn symbol_set(&self, names: &[&str]) -> Result<BitSet, ModelError> {
        names.iter().map(|n| self.symbol(n)).collect()
    }

    /// Build an interface from names, e.g. `(["c0", "c1"], "q0", "x")`.
    pub fn interface(
        &self,
        contributors: &[&str],
        leader: &str,
        memory: &str,
    ) -> Result<Interface, ModelError> {
        let i = Interface {
            contributors: self.contributor_set(contributors)?,
            leader: self.leader_state(leader)?,
            memory: self.symbol(memory)?,
        };
        self.check_interface(&i)?;
        Ok(i)
    }

    /// Parse the command-line interface syntax `c0+c1:q0:x`.
    pub fn parse_interface(&self, text: &str) -> Result<Interface, ModelError> {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        let [set, leader, memory] = parts.as_slice() else {
            return Err(ModelError::BadInterface(format!(
                "expected `S:q:a`, got `{text}`"
            )));
        };
        let names: Vec<&str> = set
            .split('+')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        self.interface(&names, leader, memory)
    }

    pub fn check_interface(&self, i: &Interface) -> Result<(), ModelError> {
        if i.contributors.is_empty() {
            return Err(ModelError::BadInterface("empty contributor set".into()));
        }
        if !i.contributors.is_subset(self.contributor.all_states()) {
            return Err(ModelError::BadInterface(
                "contributor state out of range".into(),
            ));
        }
        if i.leader >= self.leader.state_count() {
            return Err(ModelError::BadInterface("leader state out of range".into()));
        }
        if i.memory >= self.domain_size() {
            return Err(ModelError::BadInterface("memory value out of range".into()));
        }
        Ok(())
    }

    pub fn display_interface(&self, i: &Interface) -> String {
        let set: Vec<&str> = i
            .contributors
            .iter()
            .map(|p| self.contributor.state_name(p))
            .collect();
        format!(
            "{}:{}:{}",
            set.join("+"),
            self.leader.state_name(i.leader),
            self.symbol_name(i.memory)
        )
    }

    pub fn display_symbols(&self, set: BitSet) -> Vec<String> {
        set.iter()
            .map(|a| self.symbol_name(a).to_string())
            .collect()
    }

    pub fn display_op(&self, op: MemOp) -> String {
        match op {
            MemOp::Eps => "eps".to_string(),
            MemOp::Read(a) => format!("?{}", self.symbol_name(a)),
            MemOp::Write(a) => format!("!{}", self.symbol_name(a)),
        }
    }
}

/// Summary `(S, q, a)` of a configuration: the set of occupied contributor
/// states, the leader state and the memory value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Interface {
    pub contributors: BitSet,
    pub leader: StateId,
    pub memory: Symbol,
}

impl fmt::Display for Interface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({:?}, {}, {})",
            self.contributors, self.leader, self.memory
        )
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub const SYS1: &str = "\
system {
  domain = [x, y]
  init = x
  leader {
    init = q0
    final = [q0]
    q0 -> q1 : ?y
    q1 -> q0 : !x
  }
  contributor {
    init = c0
    c0 -> c1 : !y
    c1 -> c0 : ?x
  }
}
";

    pub const SYS2: &str = "\
system {
  domain = [x, y]
  init = x
  leader {
    init = q0
    final = [q1]
    q0 -> q1 : ?y
  }
  contributor {
    init = c0
    c0 -> c0 : ?x
  }
}
";

    pub fn sys1() -> System {
        parse_system(SYS1).unwrap()
    }

    pub fn sys2() -> System {
        parse_system(SYS2).unwrap()
    }
}
