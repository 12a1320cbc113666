use super::{Engine, FirstWriteSeq, Witness, WitnessError};
use crate::bits::BitSet;
use crate::graph::scc_ids;
use crate::model::{Automaton, MemOp, StateId, Symbol};

/// Values the leader can write on a cycle at `q` that reads only from
/// `gamma`.
pub(super) fn loop_set_of(leader: &Automaton, q: StateId, gamma: BitSet) -> BitSet {
    let kept: Vec<_> = leader
        .transitions()
        .iter()
        .filter(|t| match t.op {
            MemOp::Read(b) => gamma.contains(b),
            MemOp::Write(_) | MemOp::Eps => true,
        })
        .collect();
    let ids = scc_ids(leader.state_count(), kept.iter().map(|t| (t.from, t.to)));
    kept.iter()
        .filter(|t| ids[t.from] == ids[q] && ids[t.to] == ids[q])
        .filter_map(|t| match t.op {
            MemOp::Write(b) => Some(b),
            _ => None,
        })
        .collect()
}

/// One position of an expression chain: reads of `gamma` while the leader
/// idles, then optionally the leader's write `after`.
struct Position {
    gamma: BitSet,
    after: Option<Symbol>,
}

/// The regular language of reads offered to a contributor, as a chain of
/// positions. A contributor may also read the leader's write at a position
/// repeatedly until it writes itself or the chain moves on.
struct Chain {
    positions: Vec<Position>,
    /// Nothing happens at position 0 before the initial value is written.
    inert_start: bool,
}

impl Chain {
    /// Contributor states reachable in the product of the contributor and
    /// the chain; stops early once `goal` is hit.
    ///
    /// Every product move stays on its node or goes forward, so one sweep
    /// over the nodes with a closure at each suffices.
    fn explore(&self, engine: &Engine, goal: BitSet) -> (BitSet, bool) {
        let succ = &engine.contrib_succ;
        let len = self.positions.len();
        // Node 2m is "at position m", 2m + 1 is "just after the leader
        // wrote at position m".
        let mut at = vec![BitSet::EMPTY; 2 * len];
        at[0] = BitSet::singleton(engine.system().contributor().initial());
        let mut reached = BitSet::EMPTY;
        for node in 0..2 * len {
            let m = node / 2;
            let pos = &self.positions[m];
            let mut set = at[node];
            if set.is_empty() {
                continue;
            }
            let step = |p: StateId| -> BitSet {
                if node % 2 == 0 {
                    if self.inert_start && m == 0 {
                        return BitSet::EMPTY;
                    }
                    pos.gamma
                        .iter()
                        .fold(succ.eps[p].union(succ.write[p]), |acc, a| {
                            acc.union(succ.read[p][a])
                        })
                } else {
                    let a = pos.after.expect("after-node without a leader write");
                    succ.eps[p].union(succ.read[p][a])
                }
            };
            let mut todo = set;
            while let Some(p) = todo.first() {
                todo.remove(p);
                let fresh = step(p).difference(set);
                set = set.union(fresh);
                todo = todo.union(fresh);
            }
            reached = reached.union(set);
            if !set.intersection(goal).is_empty() {
                return (reached, true);
            }
            let last = m + 1 == len;
            if node % 2 == 0 {
                if !last {
                    at[node + 2] = at[node + 2].union(set);
                }
                if pos.after.is_some() {
                    at[node + 1] = at[node + 1].union(set);
                }
            } else if !last {
                let written = set
                    .iter()
                    .fold(BitSet::EMPTY, |acc, p| acc.union(succ.write[p]));
                at[node + 1] = at[node + 1].union(set).union(written);
            }
        }
        (reached, false)
    }
}

impl Engine<'_> {
    /// `Loop(q, Γ)` over the normalised leader.
    pub fn loop_set(&self, q: StateId, gamma: BitSet) -> BitSet {
        match &self.loops {
            Some(table) => table[q][gamma.mask() as usize],
            None => loop_set_of(&self.leader, q, gamma),
        }
    }

    fn check_states(&self, x: &Witness) -> Result<(), WitnessError> {
        let n = self.leader.state_count();
        let d = self.sys.domain_size();
        let bad_state = x.target >= n || x.word.iter().any(|&(q, _)| q >= n);
        let bad_value = x.word.iter().any(|&(_, v)| v.is_some_and(|b| b >= d));
        if bad_state || bad_value {
            return Err(WitnessError::Malformed(
                "state or value out of range".into(),
            ));
        }
        Ok(())
    }

    fn check_lengths(&self, x: &Witness, beta: &FirstWriteSeq) -> Result<(), WitnessError> {
        self.check_states(x)?;
        if beta.len() != x.order() {
            return Err(WitnessError::LengthMismatch {
                beta: beta.len(),
                order: x.order(),
            });
        }
        Ok(())
    }

    /// Does `x` describe a leader run in which every read is of a value
    /// already supplied by a first write of `beta`?
    pub fn lvalid(&self, x: &Witness, beta: &FirstWriteSeq) -> Result<bool, WitnessError> {
        self.lvalid_from(x, beta, 0)
    }

    /// [`Engine::lvalid`] checking only the steps from `start` on.
    pub(super) fn lvalid_from(
        &self,
        x: &Witness,
        beta: &FirstWriteSeq,
        start: usize,
    ) -> Result<bool, WitnessError> {
        self.check_lengths(x, beta)?;
        if x.init() == self.pre && x.sigma.first() == Some(&0) {
            return Ok(false);
        }
        let mut prev = BitSet::EMPTY;
        for (i, &(q, v)) in x.word.iter().enumerate().skip(start) {
            let next = x.state_after(i);
            let ok = match v {
                Some(b) => self.leader.has_transition(q, MemOp::Write(b), next),
                None => {
                    let avail = beta.available(&x.sigma, i);
                    debug_assert!(prev.is_subset(avail));
                    prev = avail;
                    // The pre-initial state only ever writes the initial value.
                    (next == q && q != self.pre)
                        || self.leader.has_transition(q, MemOp::Eps, next)
                        || avail
                            .iter()
                            .any(|b| self.leader.has_transition(q, MemOp::Read(b), next))
                }
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn position(&self, x: &Witness, alpha: &FirstWriteSeq, m: usize) -> BitSet {
        let avail = alpha.available(&x.sigma, m);
        self.loop_set(x.word[m].0, avail).union(avail)
    }

    /// Can a contributor reach a state that writes `beta[index]` while
    /// reading only what `x` and the earlier first writes provide up to
    /// position `sigma[index]`? `index` is 0-based.
    pub fn cvalid(
        &self,
        x: &Witness,
        beta: &FirstWriteSeq,
        index: usize,
    ) -> Result<bool, WitnessError> {
        self.check_lengths(x, beta)?;
        if index >= x.order() {
            return Err(WitnessError::IndexOutOfRange {
                index,
                order: x.order(),
            });
        }
        let b = beta.values()[index];
        let writers = self.writers[b];
        if writers.is_empty() {
            return Ok(false);
        }
        let alpha = beta.prefix(index);
        Ok(self
            .chain_to(x, &alpha, x.sigma[index])
            .explore(self, writers)
            .1)
    }

    /// Contributor states reachable reading along `x` up to position `j`,
    /// with first writes `alpha` available. [`Engine::cvalid`] for index
    /// `|alpha|` holds iff this meets the writers of `beta[|alpha|]`.
    pub(super) fn contributors_until(
        &self,
        x: &Witness,
        alpha: &FirstWriteSeq,
        j: usize,
    ) -> BitSet {
        self.chain_to(x, alpha, j).explore(self, BitSet::EMPTY).0
    }

    pub(super) fn writers_of(&self, b: Symbol) -> BitSet {
        self.writers[b]
    }

    fn chain_to(&self, x: &Witness, alpha: &FirstWriteSeq, j: usize) -> Chain {
        let positions = (0..=j)
            .map(|m| Position {
                gamma: self.position(x, alpha, m),
                after: if m < j { x.word[m].1 } else { None },
            })
            .collect();
        Chain {
            positions,
            inert_start: x.init() == self.pre,
        }
    }

    /// Contributor states reachable while reading along the whole of `z`.
    pub fn full_expr_states(
        &self,
        z: &Witness,
        beta: &FirstWriteSeq,
    ) -> Result<BitSet, WitnessError> {
        self.check_lengths(z, beta)?;
        let mut positions: Vec<Position> = (0..z.len())
            .map(|m| Position {
                gamma: self.position(z, beta, m),
                after: z.word[m].1,
            })
            .collect();
        positions.push(Position {
            gamma: BitSet::EMPTY,
            after: None,
        });
        let chain = Chain {
            positions,
            inert_start: z.init() == self.pre,
        };
        Ok(chain.explore(self, BitSet::EMPTY).0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::parse_system;

    fn beta(v: &[Symbol]) -> FirstWriteSeq {
        FirstWriteSeq::new(v.to_vec()).unwrap()
    }

    #[test]
    fn loop_sets_sys1() {
        let s = sys1();
        let e = Engine::new(&s).unwrap();
        assert_eq!(e.loop_set(0, BitSet::EMPTY), BitSet::EMPTY);
        assert_eq!(e.loop_set(0, BitSet::singleton(1)), BitSet::singleton(0));
        let w = parse_system(
            "system { domain = [x, y] init = x
               leader { init = q0 q0 -> q0 : !y }
               contributor { init = c0 } }",
        )
        .unwrap();
        let e = Engine::new(&w).unwrap();
        assert!(e.loop_set(0, BitSet::EMPTY).contains(1));
    }

    #[test]
    fn lvalid_sys1() {
        let s = sys1();
        let e = Engine::new(&s).unwrap();
        let x = Witness::new(vec![(0, None)], 1, vec![0]).unwrap();
        assert!(e.lvalid(&x, &beta(&[1])).unwrap());
        assert!(!e.lvalid(&x, &beta(&[0])).unwrap());
        assert!(e.lvalid(&Witness::empty(0), &beta(&[])).unwrap());
        assert!(e.lvalid(&x, &beta(&[])).is_err());
        // The initial write cannot host a first write.
        let pre = Witness::new(vec![(2, Some(0)), (0, None)], 1, vec![0]).unwrap();
        assert!(!e.lvalid(&pre, &beta(&[1])).unwrap());
        let pre = Witness::new(vec![(2, Some(0)), (0, None)], 1, vec![1]).unwrap();
        assert!(e.lvalid(&pre, &beta(&[1])).unwrap());
        // Nor can it idle before writing.
        let idle = Witness::new(vec![(2, None), (2, Some(0))], 0, vec![]).unwrap();
        assert!(!e.lvalid(&idle, &beta(&[])).unwrap());
    }

    #[test]
    fn cvalid_examples() {
        let s = sys1();
        let e = Engine::new(&s).unwrap();
        let x = Witness::new(vec![(0, None)], 1, vec![0]).unwrap();
        assert!(e.cvalid(&x, &beta(&[1]), 0).unwrap());
        assert!(e.cvalid(&x, &beta(&[1]), 1).is_err());

        // The y-writer needs z first, which nobody provides.
        let blocked = parse_system(
            "system { domain = [x, y, z] init = x
               leader { init = q0 q0 -> q1 : ?y }
               contributor { init = c0 c0 -> c1 : ?z c1 -> c2 : !y } }",
        )
        .unwrap();
        let e = Engine::new(&blocked).unwrap();
        let x = Witness::new(vec![(2, Some(0)), (0, None)], 1, vec![1]).unwrap();
        assert!(!e.cvalid(&x, &beta(&[1]), 0).unwrap());
    }

    #[test]
    fn contributor_rereads_leader_write() {
        let s = parse_system(
            "system { domain = [x, y, z] init = x
               leader { init = q0 q0 -> q1 : !y q1 -> q2 : ?z }
               contributor { init = c0 c0 -> c1 : ?y c1 -> c2 : ?y c2 -> c3 : !z } }",
        )
        .unwrap();
        let e = Engine::new(&s).unwrap();
        let x = Witness::new(vec![(3, Some(0)), (0, Some(1)), (1, None)], 2, vec![2]).unwrap();
        assert!(e.lvalid(&x, &beta(&[2])).unwrap());
        assert!(e.cvalid(&x, &beta(&[2]), 0).unwrap());
    }

    #[test]
    fn full_expr_examples() {
        let s = sys1();
        let e = Engine::new(&s).unwrap();
        let x = Witness::new(vec![(0, None)], 1, vec![0]).unwrap();
        assert_eq!(
            e.full_expr_states(&x, &beta(&[1])).unwrap(),
            BitSet::from_mask(0b11)
        );

        let s2 = sys2();
        let e2 = Engine::new(&s2).unwrap();
        let x = Witness::new(vec![(2, Some(0)), (0, None)], 0, vec![1]).unwrap();
        assert_eq!(
            e2.full_expr_states(&x, &beta(&[1])).unwrap(),
            BitSet::singleton(0)
        );

        let w = parse_system(
            "system { domain = [x, y] init = x
               leader { init = q0 }
               contributor { init = c0 c0 -> c1 : !y c1 -> c2 : eps c2 -> c3 : ?x } }",
        )
        .unwrap();
        let e = Engine::new(&w).unwrap();
        let got = e.full_expr_states(&Witness::empty(0), &beta(&[])).unwrap();
        assert_eq!(got, BitSet::from_mask(0b111));
    }
}
