//! Liveness: can the leader visit a final state infinitely often?
//!
//! An infinite run splits into a finite prefix reaching some configuration
//! and a saturated cycle on it. The reachability back end lists the
//! interfaces of reachable configurations at final leader states; the
//! answer is positive iff one of them admits a saturated cycle.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::cycle::{cyc, CycEvidence};
use crate::model::{Interface, System};
use crate::subsets::{interfaces_from_table, saturate_abstract};
use crate::witness::{
    interfaces_from_witness_table, valid_short_table, Engine, ShortValidTable, WitnessError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Subsets,
    Witness,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Subsets => "subsets",
            Backend::Witness => "witness",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LivenessStats {
    pub interfaces: usize,
    pub cyc_calls: usize,
    pub abstract_states: Option<usize>,
    pub table_entries: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub answer: bool,
    pub interface: Option<Interface>,
    pub evidence: Option<CycEvidence>,
    pub backend: Backend,
    pub stats: LivenessStats,
}

/// Interfaces at final leader states of reachable configurations, sorted.
pub fn final_interfaces(
    sys: &System,
    backend: Backend,
    stats: &mut LivenessStats,
) -> Result<BTreeSet<Interface>, WitnessError> {
    let finals = Some(sys.final_states());
    let out = match backend {
        Backend::Subsets => {
            let tbl = saturate_abstract(sys);
            stats.abstract_states = Some(tbl.explored());
            interfaces_from_table(&tbl, finals)
        }
        Backend::Witness => {
            let engine = Engine::new(sys)?;
            let tbl = valid_short_table(&engine)?;
            stats.table_entries = Some(tbl.len());
            interfaces_from_witness_table(&engine, &tbl, finals)?
        }
    };
    stats.interfaces = out.len();
    Ok(out)
}

pub fn lcl(sys: &System, backend: Backend) -> Result<Verdict, WitnessError> {
    let mut stats = LivenessStats::default();
    if sys.final_states().is_empty() {
        return Ok(decide(sys, backend, BTreeSet::new(), stats));
    }
    let candidates = final_interfaces(sys, backend, &mut stats)?;
    Ok(decide(sys, backend, candidates, stats))
}

/// [`lcl`] on the witness back end, reusing a table already built for
/// `engine`.
pub fn lcl_from_witness_table(
    engine: &Engine,
    tbl: &ShortValidTable,
) -> Result<Verdict, WitnessError> {
    let sys = engine.system();
    let candidates = interfaces_from_witness_table(engine, tbl, Some(sys.final_states()))?;
    let stats = LivenessStats {
        interfaces: candidates.len(),
        table_entries: Some(tbl.len()),
        ..Default::default()
    };
    Ok(decide(sys, Backend::Witness, candidates, stats))
}

/// The first candidate, in sorted order, admitting a saturated cycle.
fn decide(
    sys: &System,
    backend: Backend,
    candidates: BTreeSet<Interface>,
    mut stats: LivenessStats,
) -> Verdict {
    let candidates: Vec<Interface> = candidates.into_iter().collect();
    let results: Vec<_> = candidates.par_iter().map(|i| cyc(sys, i)).collect();
    stats.cyc_calls = results.len();
    let hit = candidates.iter().zip(results).find(|(_, r)| r.holds);
    Verdict {
        answer: hit.is_some(),
        interface: hit.as_ref().map(|(i, _)| **i),
        evidence: hit.and_then(|(_, r)| r.evidence),
        backend,
        stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitSet;
    use crate::model::fixtures::*;

    #[test]
    fn sys1_live_at_q0() {
        let s = sys1();
        for backend in [Backend::Subsets, Backend::Witness] {
            let v = lcl(&s, backend).unwrap();
            assert!(v.answer);
            assert_eq!(
                v.interface,
                Some(s.interface(&["c0", "c1"], "q0", "x").unwrap())
            );
            assert_eq!(v.evidence, Some(CycEvidence::Stable { gamma: s.domain() }));
        }
    }

    #[test]
    fn sys2_verdicts() {
        let s = sys2();
        for backend in [Backend::Subsets, Backend::Witness] {
            assert!(!lcl(&s, backend).unwrap().answer);
            let q0 = s.with_final_names(&["q0"]).unwrap();
            let v = lcl(&q0, backend).unwrap();
            assert!(v.answer);
            assert_eq!(v.evidence, Some(CycEvidence::ReadOnly));
        }
    }

    #[test]
    fn no_final_states() {
        let s = sys1().with_final_states(BitSet::EMPTY).unwrap();
        let v = lcl(&s, Backend::Subsets).unwrap();
        assert!(!v.answer);
        assert_eq!(v.stats.cyc_calls, 0);
    }
}
