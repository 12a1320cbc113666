//! Saturated-cycle detection on an interface `(S, q, a)`.
//!
//! For a symbol set `Γ`, the contributor graph restricted to `S` keeps
//! reads of `Γ`, all writes and all ε-moves. Its SCC decomposition yields
//! the writes that contributors can repeat forever (`Writes_C`); the leader
//! contributes the writes on cycles through `(q, a)` in its product with the
//! memory, where contributors may overwrite the memory with any value in
//! `Writes_C` (`Writes_L`). A cycle with at least one write exists iff the
//! operator `Γ ↦ Writes_C ∪ Writes_L` has a nonempty fixed point; cycles
//! consisting only of reads are checked separately.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::bits::{subsets, BitSet};
use crate::graph::scc_ids;
use crate::model::{Interface, MemOp, System};

/// Largest domain [`cyc_bruteforce`] accepts.
pub const BRUTEFORCE_MAX_DOMAIN: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CycleError {
    #[error("domain has {0} symbols, brute force supports at most {BRUTEFORCE_MAX_DOMAIN}")]
    DomainTooLarge(usize),
}

/// Γ-SCC decomposition of `iface.contributors`, blocks ordered by their
/// smallest member.
pub fn gamma_scc(sys: &System, iface: &Interface, gamma: BitSet) -> Vec<BitSet> {
    let s = iface.contributors;
    let edges = sys.contributor().transitions().iter().filter(|t| {
        s.contains(t.from)
            && s.contains(t.to)
            && match t.op {
                MemOp::Read(b) => gamma.contains(b),
                MemOp::Write(_) | MemOp::Eps => true,
            }
    });
    let n = sys.contributor().state_count();
    let ids = scc_ids(n, edges.map(|t| (t.from, t.to)));
    let mut blocks: Vec<BitSet> = Vec::new();
    let mut block_of: HashMap<usize, usize> = HashMap::new();
    for p in s {
        let b = *block_of.entry(ids[p]).or_insert_with(|| {
            blocks.push(BitSet::EMPTY);
            blocks.len() - 1
        });
        blocks[b].insert(p);
    }
    blocks
}

/// Symbols written on contributor edges inside a block.
pub fn contributor_writes(sys: &System, blocks: &[BitSet]) -> BitSet {
    sys.contributor()
        .transitions()
        .iter()
        .filter_map(|t| match t.op {
            MemOp::Write(b)
                if blocks
                    .iter()
                    .any(|k| k.contains(t.from) && k.contains(t.to)) =>
            {
                Some(b)
            }
            _ => None,
        })
        .collect()
}

/// The leader-times-memory graph in which contributors may overwrite the
/// memory with any value of `hijack`. Nodes are `state * D + value`; edges
/// carry the written symbol, if any.
fn leader_memory_graph(
    sys: &System,
    hijack: BitSet,
) -> (usize, Vec<(usize, usize, Option<usize>)>) {
    let d = sys.domain_size();
    let node = |s: usize, b: usize| s * d + b;
    let mut edges = Vec::new();
    for t in sys.leader().transitions() {
        for b in 0..d {
            match t.op {
                MemOp::Write(c) => edges.push((node(t.from, b), node(t.to, c), Some(c))),
                MemOp::Read(c) if c == b => edges.push((node(t.from, b), node(t.to, b), None)),
                MemOp::Read(_) => {}
                MemOp::Eps => edges.push((node(t.from, b), node(t.to, b), None)),
            }
        }
    }
    for s in 0..sys.leader().state_count() {
        for b in 0..d {
            for c in hijack {
                if c != b {
                    edges.push((node(s, b), node(s, c), None));
                }
            }
        }
    }
    (sys.leader().state_count() * d, edges)
}

/// Leader writes on cycles through `(iface.leader, iface.memory)`, with
/// contributors able to overwrite the memory with values in `hijack`.
pub fn leader_writes(sys: &System, iface: &Interface, hijack: BitSet) -> BitSet {
    let (n, edges) = leader_memory_graph(sys, hijack);
    let ids = scc_ids(n, edges.iter().map(|&(u, v, _)| (u, v)));
    let home = ids[iface.leader * sys.domain_size() + iface.memory];
    let out = edges
        .iter()
        .filter(|&&(u, v, _)| ids[u] == home && ids[v] == home)
        .filter_map(|&(_, _, w)| w)
        .collect();
    debug_assert_eq!(out, leader_writes_by_product(sys, iface, hijack));
    out
}

/// Same as [`leader_writes`], one reachability product per symbol: `b` is
/// a cycle write iff some `!b` edge leaves a node reachable from the home
/// node and enters a node that reaches it back.
pub fn leader_writes_by_product(sys: &System, iface: &Interface, hijack: BitSet) -> BitSet {
    let (n, edges) = leader_memory_graph(sys, hijack);
    let home = iface.leader * sys.domain_size() + iface.memory;
    let mut fwd = vec![Vec::new(); n];
    let mut bwd = vec![Vec::new(); n];
    for &(u, v, _) in &edges {
        fwd[u].push(v);
        bwd[v].push(u);
    }
    let reach = |adj: &[Vec<usize>]| {
        let mut seen = vec![false; n];
        let mut stack = vec![home];
        seen[home] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    };
    let from_home = reach(&fwd);
    let to_home = reach(&bwd);
    (0..sys.domain_size())
        .filter(|&b| {
            edges
                .iter()
                .any(|&(u, v, w)| w == Some(b) && from_home[u] && to_home[v])
        })
        .collect()
}

/// `Writes_C ∪ Writes_L` of a decomposition of `iface.contributors`.
pub fn writes_of_decomposition(sys: &System, iface: &Interface, blocks: &[BitSet]) -> BitSet {
    let wc = contributor_writes(sys, blocks);
    wc.union(leader_writes(sys, iface, wc))
}

/// `Writes(D(S, X))`.
pub fn writes_scc(sys: &System, iface: &Interface, x: BitSet) -> BitSet {
    writes_of_decomposition(sys, iface, &gamma_scc(sys, iface, x))
}

/// Evaluates the writes operator for one interface, caching the leader
/// part on `Writes_C`.
pub struct WritesOperator<'a> {
    sys: &'a System,
    iface: Interface,
    leader_memo: HashMap<BitSet, BitSet>,
}

impl<'a> WritesOperator<'a> {
    pub fn new(sys: &'a System, iface: Interface) -> Self {
        WritesOperator {
            sys,
            iface,
            leader_memo: HashMap::new(),
        }
    }

    pub fn apply(&mut self, x: BitSet) -> BitSet {
        let wc = contributor_writes(self.sys, &gamma_scc(self.sys, &self.iface, x));
        let (sys, iface) = (self.sys, &self.iface);
        let wl = *self
            .leader_memo
            .entry(wc)
            .or_insert_with(|| leader_writes(sys, iface, wc));
        wc.union(wl)
    }
}

/// Kleene iteration from `D`. Returns the greatest fixed point and the
/// chain `Γ0 = D ⊇ Γ1 ⊇ ... ⊇ fixed point`, the fixed point appearing once.
pub fn greatest_fixed_point(sys: &System, iface: &Interface) -> (BitSet, Vec<BitSet>) {
    let mut op = WritesOperator::new(sys, *iface);
    let mut chain = vec![sys.domain()];
    loop {
        let cur = *chain.last().unwrap();
        let next = op.apply(cur);
        debug_assert!(next.is_subset(cur));
        if next == cur {
            return (cur, chain);
        }
        chain.push(next);
    }
}

fn has_cycle_through(n: usize, edges: &[(usize, usize)], node: usize) -> bool {
    let ids = scc_ids(n, edges.iter().copied());
    edges
        .iter()
        .any(|&(u, v)| ids[u] == ids[node] && ids[v] == ids[node])
}

/// Is there a cycle using only reads of `iface.memory` and ε-moves, either
/// of the leader at `iface.leader` or of a contributor inside
/// `iface.contributors`?
pub fn read_only_cycle_check(sys: &System, iface: &Interface) -> bool {
    let quiet = |op: MemOp| matches!(op, MemOp::Eps) || op == MemOp::Read(iface.memory);
    let leader: Vec<(usize, usize)> = sys
        .leader()
        .transitions()
        .iter()
        .filter(|t| quiet(t.op))
        .map(|t| (t.from, t.to))
        .collect();
    if has_cycle_through(sys.leader().state_count(), &leader, iface.leader) {
        return true;
    }
    let s = iface.contributors;
    let contrib: Vec<(usize, usize)> = sys
        .contributor()
        .transitions()
        .iter()
        .filter(|t| quiet(t.op) && s.contains(t.from) && s.contains(t.to))
        .map(|t| (t.from, t.to))
        .collect();
    let ids = scc_ids(sys.contributor().state_count(), contrib.iter().copied());
    contrib.iter().any(|&(u, v)| ids[u] == ids[v])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CycEvidence {
    /// A nonempty stable Γ.
    Stable { gamma: BitSet },
    /// A cycle of reads of the memory value and ε-moves.
    ReadOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycResult {
    pub holds: bool,
    pub evidence: Option<CycEvidence>,
    pub chain: Vec<BitSet>,
}

/// Is there a saturated cycle on `iface`?
pub fn cyc(sys: &System, iface: &Interface) -> CycResult {
    let (gamma, chain) = greatest_fixed_point(sys, iface);
    let evidence = if !gamma.is_empty() {
        Some(CycEvidence::Stable { gamma })
    } else if read_only_cycle_check(sys, iface) {
        Some(CycEvidence::ReadOnly)
    } else {
        None
    };
    CycResult {
        holds: evidence.is_some(),
        evidence,
        chain,
    }
}

/// All nonempty Γ with `Writes(D(S, Γ)) = Γ`, by enumeration. The leader
/// part is computed per symbol by [`leader_writes_by_product`].
pub fn stable_sets(sys: &System, iface: &Interface) -> Result<Vec<BitSet>, CycleError> {
    if sys.domain_size() > BRUTEFORCE_MAX_DOMAIN {
        return Err(CycleError::DomainTooLarge(sys.domain_size()));
    }
    Ok(subsets(sys.domain())
        .filter(|g| !g.is_empty())
        .filter(|&g| {
            let wc = contributor_writes(sys, &gamma_scc(sys, iface, g));
            wc.union(leader_writes_by_product(sys, iface, wc)) == g
        })
        .collect())
}

/// [`cyc`] by enumerating every candidate Γ instead of iterating.
pub fn cyc_bruteforce(sys: &System, iface: &Interface) -> Result<bool, CycleError> {
    Ok(!stable_sets(sys, iface)?.is_empty() || read_only_cycle_check(sys, iface))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::parse_system;

    fn set(sys: &System, names: &[&str]) -> BitSet {
        sys.symbol_set(names).unwrap()
    }

    #[test]
    fn decompositions_sys1() {
        let s = sys1();
        let i = s.interface(&["c0", "c1"], "q0", "x").unwrap();
        assert_eq!(gamma_scc(&s, &i, s.domain()), vec![BitSet::from_mask(0b11)]);
        assert_eq!(
            gamma_scc(&s, &i, BitSet::EMPTY),
            vec![BitSet::singleton(0), BitSet::singleton(1)]
        );
        let one = s.interface(&["c1"], "q0", "x").unwrap();
        assert_eq!(gamma_scc(&s, &one, s.domain()), vec![BitSet::singleton(1)]);
    }

    #[test]
    fn writes_examples() {
        let s = sys1();
        let i = s.interface(&["c0", "c1"], "q0", "x").unwrap();
        let dec = gamma_scc(&s, &i, s.domain());
        assert_eq!(contributor_writes(&s, &dec), set(&s, &["y"]));
        assert_eq!(leader_writes(&s, &i, set(&s, &["y"])), set(&s, &["x"]));
        assert_eq!(writes_of_decomposition(&s, &i, &dec), set(&s, &["x", "y"]));
        assert_eq!(writes_scc(&s, &i, BitSet::EMPTY), BitSet::EMPTY);

        let s2 = sys2();
        let i2 = s2.interface(&["c0"], "q0", "x").unwrap();
        assert_eq!(writes_scc(&s2, &i2, s2.domain()), BitSet::EMPTY);

        let s3 = parse_system(
            "system { domain = [x, y] init = x
               leader { init = q0 q0 -> q0 : !y }
               contributor { init = c0 } }",
        )
        .unwrap();
        let i3 = s3.interface(&["c0"], "q0", "y").unwrap();
        assert_eq!(writes_scc(&s3, &i3, BitSet::EMPTY), set(&s3, &["y"]));
    }

    #[test]
    fn fixed_points() {
        let s = sys1();
        let i = s.interface(&["c0", "c1"], "q0", "x").unwrap();
        let (g, chain) = greatest_fixed_point(&s, &i);
        assert_eq!(g, s.domain());
        assert_eq!(chain, vec![s.domain()]);

        let s2 = sys2();
        let i2 = s2.interface(&["c0"], "q0", "x").unwrap();
        let (g, chain) = greatest_fixed_point(&s2, &i2);
        assert_eq!(g, BitSet::EMPTY);
        assert_eq!(chain, vec![s2.domain(), BitSet::EMPTY]);
    }

    #[test]
    fn contributor_self_loop_write_survives() {
        let s = parse_system(
            "system { domain = [x, y] init = x
               leader { init = q0 q0 -> q1 : ?x }
               contributor { init = c0 c0 -> c0 : !y } }",
        )
        .unwrap();
        let i = s.interface(&["c0"], "q1", "x").unwrap();
        let (g, _) = greatest_fixed_point(&s, &i);
        assert!(g.contains(1));
    }

    #[test]
    fn read_only_examples() {
        let s2 = sys2();
        assert!(read_only_cycle_check(
            &s2,
            &s2.interface(&["c0"], "q0", "x").unwrap()
        ));
        assert!(!read_only_cycle_check(
            &s2,
            &s2.interface(&["c0"], "q0", "y").unwrap()
        ));
        let s = sys1();
        assert!(!read_only_cycle_check(
            &s,
            &s.interface(&["c0", "c1"], "q0", "x").unwrap()
        ));
        let eps = parse_system(
            "system { domain = [x] init = x
               leader { init = q0 q0 -> q0 : eps }
               contributor { init = c0 } }",
        )
        .unwrap();
        assert!(read_only_cycle_check(
            &eps,
            &eps.interface(&["c0"], "q0", "x").unwrap()
        ));
    }

    #[test]
    fn cyc_examples() {
        let s = sys1();
        let i = s.interface(&["c0", "c1"], "q0", "x").unwrap();
        let r = cyc(&s, &i);
        assert!(r.holds);
        assert_eq!(r.evidence, Some(CycEvidence::Stable { gamma: s.domain() }));
        assert_eq!(cyc_bruteforce(&s, &i), Ok(true));

        let s2 = sys2();
        let r = cyc(&s2, &s2.interface(&["c0"], "q0", "x").unwrap());
        assert_eq!(r.evidence, Some(CycEvidence::ReadOnly));
        let i = s2.interface(&["c0"], "q0", "y").unwrap();
        assert!(!cyc(&s2, &i).holds);
        assert_eq!(cyc_bruteforce(&s2, &i), Ok(false));
    }

    #[test]
    fn leader_reads_its_own_write() {
        for text in [
            "q0 -> q1 : !y  q1 -> q0 : ?y",
            "q0 -> q1 : ?y  q1 -> q0 : !y",
        ] {
            let s = parse_system(&format!(
                "system {{ domain = [x, y] init = x
                   leader {{ init = q0 {text} }}
                   contributor {{ init = c0 }} }}"
            ))
            .unwrap();
            let i = s.interface(&["c0"], "q0", "y").unwrap();
            assert!(cyc(&s, &i).holds, "{text}");
        }
    }
}
