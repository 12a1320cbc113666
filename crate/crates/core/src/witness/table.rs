use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use rustc_hash::FxHashMap;

use serde::Serialize;

use super::word::concat;
use super::{Engine, FirstWriteSeq, Witness, WitnessError};
use crate::bits::BitSet;
use crate::model::{Interface, MemOp, StateId, Symbol};

/// Default bound on stored table entries.
pub const DEFAULT_ENTRY_CAP: usize = 2_000_000;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StratumStats {
    pub order: usize,
    /// Valid entries of this order.
    pub entries: usize,
    /// `(x, y)` pairs evaluated to build this stratum.
    pub pair_evaluations: usize,
    /// `|valid entries of the previous order| * |order-1 candidates|`.
    pub pair_bound: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TableStats {
    pub entries: usize,
    pub order1_candidates: usize,
    pub strata: Vec<StratumStats>,
}

/// Valid short initialized witnesses, grouped by first-write sequence.
///
/// Only witnesses starting at the engine's pre-initial state are stored;
/// every entry of a higher order extends one of those, so nothing else is
/// ever looked up.
#[derive(Debug, Clone)]
pub struct ShortValidTable {
    valid: BTreeMap<FirstWriteSeq, BTreeSet<Witness>>,
    /// `(β, z) -> (x, y)` with `z = x ⊗ y`, for entries of order >= 1.
    links: HashMap<(FirstWriteSeq, Witness), (Witness, Witness)>,
    stats: TableStats,
}

impl ShortValidTable {
    pub fn is_valid(&self, beta: &FirstWriteSeq, z: &Witness) -> bool {
        self.valid.get(beta).is_some_and(|s| s.contains(z))
    }

    /// All `(β, z)` entries in order of `β`, then `z`.
    pub fn entries(&self) -> impl Iterator<Item = (&FirstWriteSeq, &Witness)> {
        self.valid
            .iter()
            .flat_map(|(b, zs)| zs.iter().map(move |z| (b, z)))
    }

    /// The decomposition that justified `(β, z)`.
    pub fn link(&self, beta: &FirstWriteSeq, z: &Witness) -> Option<&(Witness, Witness)> {
        self.links.get(&(beta.clone(), z.clone()))
    }

    pub fn stats(&self) -> &TableStats {
        &self.stats
    }

    pub fn len(&self) -> usize {
        self.stats.entries
    }

    pub fn is_empty(&self) -> bool {
        self.stats.entries == 0
    }
}

/// Possible leader steps out of `q`: `(value written or None, next state)`,
/// stutter included except at the pre-initial state.
fn steps(engine: &Engine, q: StateId) -> BTreeSet<(Option<Symbol>, StateId)> {
    let mut out: BTreeSet<_> = engine
        .leader()
        .outgoing(q)
        .iter()
        .map(|&(op, r)| match op {
            MemOp::Write(b) => (Some(b), r),
            MemOp::Read(_) | MemOp::Eps => (None, r),
        })
        .collect();
    if q != engine.pre_initial() {
        out.insert((None, q));
    }
    out
}

/// All nonempty short words from `start` that follow leader edges, each
/// with every admissible target.
/// A leader word with its target.
type Path = (Vec<(StateId, Option<Symbol>)>, StateId);

fn short_paths(engine: &Engine, start: StateId) -> Vec<Path> {
    fn go(
        engine: &Engine,
        word: &mut Vec<(StateId, Option<Symbol>)>,
        used: BitSet,
        cur: StateId,
        out: &mut Vec<Path>,
    ) {
        if !word.is_empty() {
            out.push((word.clone(), cur));
        }
        if used.contains(cur) {
            return;
        }
        for (v, next) in steps(engine, cur) {
            word.push((cur, v));
            go(engine, word, used.with(cur), next, out);
            word.pop();
        }
    }
    let mut out = Vec::new();
    go(engine, &mut Vec::new(), BitSet::EMPTY, start, &mut out);
    out
}

/// Order-1 short witnesses that follow leader edges, grouped by init.
fn order1_candidates(engine: &Engine) -> HashMap<StateId, Vec<Witness>> {
    let mut by_init: HashMap<StateId, Vec<Witness>> = HashMap::new();
    for q in 0..engine.leader().state_count() {
        for (word, target) in short_paths(engine, q) {
            let first = usize::from(q == engine.pre_initial());
            for s in first..word.len() {
                by_init.entry(q).or_default().push(Witness {
                    word: word.clone(),
                    target,
                    sigma: vec![s],
                });
            }
        }
    }
    by_init
}

/// [`valid_short_table_with_cap`] with [`DEFAULT_ENTRY_CAP`].
pub fn valid_short_table(engine: &Engine) -> Result<ShortValidTable, WitnessError> {
    valid_short_table_with_cap(engine, DEFAULT_ENTRY_CAP)
}

/// Fill the table order by order. Order 0 holds the leader-valid
/// initialized witnesses without reads; an entry `(β b, x ⊗ y)` of order
/// `k + 1` is added whenever `(β, x)` is valid, `y` has order 1 and starts
/// where `x` ends, and `x × y` is leader valid along `β b` and lets a
/// contributor produce `b` in time.
pub fn valid_short_table_with_cap(
    engine: &Engine,
    cap: usize,
) -> Result<ShortValidTable, WitnessError> {
    let pre = engine.pre_initial();
    let empty = FirstWriteSeq::default();
    let mut base = BTreeSet::from([Witness::empty(pre)]);
    for (word, target) in short_paths(engine, pre) {
        let z = Witness {
            word,
            target,
            sigma: Vec::new(),
        };
        if engine.lvalid(&z, &empty)? {
            base.insert(z);
        }
    }
    if base.len() > cap {
        return Err(WitnessError::Capacity { cap });
    }
    let mut tbl = ShortValidTable {
        valid: BTreeMap::new(),
        links: HashMap::new(),
        stats: TableStats::default(),
    };
    tbl.stats.entries = base.len();
    tbl.stats.strata.push(StratumStats {
        order: 0,
        entries: base.len(),
        ..Default::default()
    });
    tbl.valid.insert(empty, base);

    let ord1 = order1_candidates(engine);
    let ord1_count: usize = ord1.values().map(Vec::len).sum();
    tbl.stats.order1_candidates = ord1_count;
    let writable: BitSet = engine
        .system()
        .contributor()
        .transitions()
        .iter()
        .filter_map(|t| match t.op {
            MemOp::Write(b) => Some(b),
            _ => None,
        })
        .collect();
    let no_candidates = Vec::new();

    let mut frontier: Vec<FirstWriteSeq> = vec![FirstWriteSeq::default()];
    for order in 1..=writable.len() {
        let mut stratum = StratumStats {
            order,
            ..Default::default()
        };
        let mut next: BTreeMap<FirstWriteSeq, FxHashMap<Witness, (Witness, Witness)>> =
            BTreeMap::new();
        for prefix in &frontier {
            let xs = &tbl.valid[prefix];
            let extensions: Vec<FirstWriteSeq> =
                writable.iter().filter_map(|b| prefix.pushed(b)).collect();
            for beta in &extensions {
                next.entry(beta.clone()).or_default();
            }
            let mut pairs = 0;
            for x in xs {
                for y in ord1.get(&x.target).unwrap_or(&no_candidates) {
                    pairs += 1;
                    let xy = concat(x, y)?;
                    // Shared by every extension of `prefix`.
                    let reach = engine.contributors_until(&xy, prefix, xy.sigma[order - 1]);
                    let mut z = None;
                    for beta in &extensions {
                        let b = beta.values()[order - 1];
                        // `x` stays leader valid: the new first write lies in `y`.
                        if reach.intersection(engine.writers_of(b)).is_empty()
                            || !engine.lvalid_from(&xy, beta, x.len())?
                        {
                            continue;
                        }
                        debug_assert!(engine.cvalid(&xy, beta, order - 1)?);
                        let z = z.get_or_insert_with(|| xy.shrink_star());
                        let zs = next.get_mut(beta).expect("extension registered");
                        if let Entry::Vacant(slot) = zs.entry(z.clone()) {
                            tbl.stats.entries += 1;
                            if tbl.stats.entries > cap {
                                return Err(WitnessError::Capacity { cap });
                            }
                            slot.insert((x.clone(), y.clone()));
                        }
                    }
                }
            }
            let bound = xs.len() * ord1_count;
            assert!(pairs <= bound, "evaluated {pairs} pairs, bound {bound}");
            stratum.pair_evaluations += pairs;
            stratum.pair_bound += bound;
        }
        next.retain(|_, zs| !zs.is_empty());
        stratum.entries = next.values().map(|zs| zs.len()).sum();
        tbl.stats.strata.push(stratum);
        if next.is_empty() {
            break;
        }
        frontier = next.keys().cloned().collect();
        for (beta, zs) in next {
            let mut set = BTreeSet::new();
            for (z, link) in zs {
                set.insert(z.clone());
                tbl.links.insert((beta.clone(), z), link);
            }
            tbl.valid.insert(beta, set);
        }
    }
    Ok(tbl)
}

#[derive(Debug, Clone, Serialize)]
pub struct LcrWitnessResult {
    pub reachable: bool,
    /// First valid entry reaching a final state, in table order.
    pub beta: Option<FirstWriteSeq>,
    pub witness: Option<Witness>,
    pub stats: TableStats,
}

/// Is some final leader state reachable?
pub fn lcr_witness(engine: &Engine) -> Result<LcrWitnessResult, WitnessError> {
    let tbl = valid_short_table(engine)?;
    Ok(lcr_witness_from_table(engine, &tbl))
}

pub fn lcr_witness_from_table(engine: &Engine, tbl: &ShortValidTable) -> LcrWitnessResult {
    let finals = engine.system().final_states();
    let hit = tbl
        .entries()
        .find(|(_, z)| z.init() == engine.pre_initial() && finals.contains(z.target));
    LcrWitnessResult {
        reachable: hit.is_some(),
        beta: hit.map(|(b, _)| b.clone()),
        witness: hit.map(|(_, z)| z.clone()),
        stats: tbl.stats.clone(),
    }
}

/// Interfaces `(S, q, a)` read off the valid entries: `S` is every
/// contributor state reachable along the entry, `q` its target, and `a`
/// the last value the leader wrote or any first write.
pub fn interfaces_from_witness_table(
    engine: &Engine,
    tbl: &ShortValidTable,
    restrict_final: Option<BitSet>,
) -> Result<BTreeSet<Interface>, WitnessError> {
    let pre = engine.pre_initial();
    let mut out = BTreeSet::new();
    for (beta, z) in tbl.entries() {
        if z.init() != pre
            || z.target == pre
            || restrict_final.is_some_and(|f| !f.contains(z.target))
        {
            continue;
        }
        let contributors = engine.full_expr_states(z, beta)?;
        let mut memory = beta.as_set();
        match z.word.iter().rev().find_map(|&(_, v)| v) {
            Some(a) => memory.insert(a),
            None if memory.is_empty() => memory.insert(engine.system().initial_value()),
            None => false,
        };
        for a in memory {
            out.insert(Interface {
                contributors,
                leader: z.target,
                memory: a,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::System;

    fn beta(v: &[Symbol]) -> FirstWriteSeq {
        FirstWriteSeq::new(v.to_vec()).unwrap()
    }

    #[test]
    fn sys1_table() {
        let s = sys1();
        let e = Engine::new(&s).unwrap();
        let tbl = valid_short_table(&e).unwrap();
        // ^q0 !x q0 ?y -> q1, with y supplied before the read.
        let z = Witness::new(vec![(2, Some(0)), (0, None)], 1, vec![1]).unwrap();
        assert!(tbl.is_valid(&beta(&[1]), &z));
        let (x, y) = tbl.link(&beta(&[1]), &z).unwrap();
        assert_eq!(x.order(), 0);
        assert_eq!(y.order(), 1);
        for st in &tbl.stats().strata {
            assert!(st.pair_evaluations <= st.pair_bound);
        }
    }

    #[test]
    fn order_zero_is_leader_validity() {
        let s = sys1();
        let e = Engine::new(&s).unwrap();
        let tbl = valid_short_table(&e).unwrap();
        let empty = FirstWriteSeq::default();
        for (b, z) in tbl.entries().filter(|(b, _)| b.is_empty()) {
            assert!(e.lvalid(z, b).unwrap());
        }
        let blocked = Witness::new(vec![(2, Some(0)), (0, None)], 1, vec![]).unwrap();
        assert!(!tbl.is_valid(&empty, &blocked));
    }

    #[test]
    fn sys2_never_supplies_y() {
        let s = sys2();
        let e = Engine::new(&s).unwrap();
        let tbl = valid_short_table(&e).unwrap();
        assert!(tbl.entries().all(|(b, _)| !b.values().contains(&1)));
    }

    #[test]
    fn lcr_examples() {
        let finals = |s: System, names: &[&str]| s.with_final_names(names).unwrap();
        let s = finals(sys1(), &["q1"]);
        assert!(lcr_witness(&Engine::new(&s).unwrap()).unwrap().reachable);
        let s = sys2();
        assert!(!lcr_witness(&Engine::new(&s).unwrap()).unwrap().reachable);
        let s = finals(sys2(), &["q0"]);
        assert!(lcr_witness(&Engine::new(&s).unwrap()).unwrap().reachable);
    }

    #[test]
    fn interfaces() {
        let s = sys1();
        let e = Engine::new(&s).unwrap();
        let tbl = valid_short_table(&e).unwrap();
        let got = interfaces_from_witness_table(&e, &tbl, Some(BitSet::singleton(0))).unwrap();
        assert!(got.contains(&s.interface(&["c0", "c1"], "q0", "x").unwrap()));
        assert!(got.contains(&s.interface(&["c0", "c1"], "q0", "y").unwrap()));

        let s2 = sys2();
        let e2 = Engine::new(&s2).unwrap();
        let tbl = valid_short_table(&e2).unwrap();
        let got = interfaces_from_witness_table(&e2, &tbl, Some(BitSet::singleton(0))).unwrap();
        assert_eq!(
            got,
            BTreeSet::from([s2.interface(&["c0"], "q0", "x").unwrap()])
        );
        assert!(
            interfaces_from_witness_table(&e2, &tbl, Some(BitSet::singleton(1)))
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn capacity_is_reported() {
        let s = sys1();
        let e = Engine::new(&s).unwrap();
        assert_eq!(
            valid_short_table_with_cap(&e, 1).unwrap_err(),
            WitnessError::Capacity { cap: 1 }
        );
    }
}
