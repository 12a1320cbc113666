//! Cross-validation of the engines against each other and against the
//! bounded oracles, over seeded random systems.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::cycle::{cyc, cyc_bruteforce};
use crate::gen::{generate_instance, GenParams};
use crate::liveness::{lcl, lcl_from_witness_table, Backend};
use crate::model::{Automaton, Interface, System, Transition};
use crate::semantics::{
    bounded_live_oracle, bounded_reach_oracle, bounded_saturated_cycle_oracle, Limits, OracleError,
};
use crate::subsets::{interfaces_from_table, lcr_from_table, saturate_abstract};
use crate::witness::{lcr_witness_from_table, valid_short_table, Engine};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// `lcr_subsets` vs `lcr_witness`.
    Lcr,
    /// `lcl` with both back ends.
    Lcl,
    /// `cyc` vs `cyc_bruteforce`.
    Cyc,
    /// Reach oracle positive, some engine negative.
    ReachOracle,
    /// Lasso oracle positive, some back end negative.
    LiveOracle,
    /// Saturated-cycle oracle positive, `cyc` negative.
    CycleOracle,
    /// An engine failed outright.
    EngineError,
}

impl Check {
    pub fn as_str(self) -> &'static str {
        match self {
            Check::Lcr => "lcr",
            Check::Lcl => "lcl",
            Check::Cyc => "cyc",
            Check::ReachOracle => "reach-oracle",
            Check::LiveOracle => "live-oracle",
            Check::CycleOracle => "cycle-oracle",
            Check::EngineError => "engine-error",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Disagreement {
    pub check: Check,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CrosscheckOptions {
    /// Oracles run for `t = 1..=oracle_bound`; 0 skips them.
    pub oracle_bound: usize,
    pub limits: Limits,
}

impl Default for CrosscheckOptions {
    fn default() -> Self {
        CrosscheckOptions {
            oracle_bound: 3,
            limits: Limits::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct InstanceReport {
    pub disagreements: Vec<Disagreement>,
    /// Oracle queries that hit the configuration cap.
    pub inconclusive: usize,
}

impl InstanceReport {
    fn flag(&mut self, check: Check, detail: impl Into<String>) {
        self.disagreements.push(Disagreement {
            check,
            detail: detail.into(),
        });
    }
}

/// Run every comparison on one system.
pub fn check_system(sys: &System, opts: &CrosscheckOptions) -> InstanceReport {
    let mut rep = InstanceReport::default();
    let tbl = saturate_abstract(sys);
    let lcr_s = lcr_from_table(sys, &tbl).reachable;
    let witness = Engine::new(sys).and_then(|e| {
        let wt = valid_short_table(&e)?;
        let lcr = lcr_witness_from_table(&e, &wt).reachable;
        Ok((lcr, lcl_from_witness_table(&e, &wt)?))
    });
    let (lcr_w, lcl_w) = match witness {
        Ok(r) => r,
        Err(e) => {
            rep.flag(Check::EngineError, format!("witness engine: {e}"));
            return rep;
        }
    };
    if lcr_s != lcr_w {
        rep.flag(Check::Lcr, format!("subsets {lcr_s}, witness {lcr_w}"));
    }
    let lcl_w = lcl_w.answer;
    let lcl_s = match lcl(sys, Backend::Subsets) {
        Ok(v) => v.answer,
        Err(e) => {
            rep.flag(Check::EngineError, format!("lcl: {e}"));
            return rep;
        }
    };
    if lcl_s != lcl_w {
        rep.flag(Check::Lcl, format!("subsets {lcl_s}, witness {lcl_w}"));
    }

    let ifaces = interfaces_from_table(&tbl, None);
    let mut cyc_true = BTreeSet::new();
    for i in &ifaces {
        let fast = cyc(sys, i).holds;
        if fast {
            cyc_true.insert(*i);
        }
        match cyc_bruteforce(sys, i) {
            Ok(slow) if slow != fast => rep.flag(
                Check::Cyc,
                format!(
                    "{}: fixpoint {fast}, enumeration {slow}",
                    sys.display_interface(i)
                ),
            ),
            Ok(_) => {}
            Err(e) => rep.flag(Check::EngineError, format!("cyc_bruteforce: {e}")),
        }
    }

    for t in 1..=opts.oracle_bound {
        match bounded_reach_oracle(sys, sys.final_states(), t, &opts.limits) {
            Ok(r) if r.found && !(lcr_s && lcr_w) => rep.flag(
                Check::ReachOracle,
                format!("t={t}: oracle reaches, subsets {lcr_s}, witness {lcr_w}"),
            ),
            Ok(_) => {}
            Err(_) => rep.inconclusive += 1,
        }
        match bounded_live_oracle(sys, t, &opts.limits) {
            Ok(r) if r.found && !(lcl_s && lcl_w) => rep.flag(
                Check::LiveOracle,
                format!("t={t}: oracle lasso, subsets {lcl_s}, witness {lcl_w}"),
            ),
            Ok(_) => {}
            Err(_) => rep.inconclusive += 1,
        }
        for i in ifaces.iter().filter(|i| i.contributors.len() <= t) {
            match bounded_saturated_cycle_oracle(sys, i, t, &opts.limits) {
                Ok(true) if !cyc_true.contains(i) => rep.flag(
                    Check::CycleOracle,
                    format!(
                        "t={t}: oracle cycle on {}, cyc false",
                        sys.display_interface(i)
                    ),
                ),
                Ok(_) => {}
                Err(OracleError::Inconclusive { .. }) => rep.inconclusive += 1,
                Err(e) => rep.flag(Check::EngineError, e.to_string()),
            }
        }
    }
    rep
}

/// Whether `i` admits a saturated cycle per the oracle at some `t` up to
/// `bound`.
pub fn cycle_confirmed(
    sys: &System,
    i: &Interface,
    bound: usize,
    limits: &Limits,
) -> Result<bool, OracleError> {
    for t in i.contributors.len().max(1)..=bound {
        if bounded_saturated_cycle_oracle(sys, i, t, limits)? {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedReport {
    pub seed: u64,
    pub params: GenParams,
    pub report: InstanceReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Summary {
    pub instances: usize,
    pub disagreements: usize,
    pub inconclusive: usize,
    /// Seeds with at least one disagreement, ascending.
    pub failing: Vec<SeedReport>,
}

/// Generate and check one system per seed, in parallel.
pub fn run(
    seeds: impl IntoIterator<Item = u64>,
    params: impl Fn(u64) -> GenParams + Sync,
    opts: &CrosscheckOptions,
) -> Summary {
    let seeds: Vec<u64> = seeds.into_iter().collect();
    let reports: Vec<SeedReport> = seeds
        .par_iter()
        .map(|&seed| {
            let p = params(seed);
            let report = match generate_instance(&p) {
                Ok(sys) => check_system(&sys, opts),
                Err(e) => {
                    let mut r = InstanceReport::default();
                    r.flag(Check::EngineError, format!("generator: {e}"));
                    r
                }
            };
            SeedReport {
                seed,
                params: p,
                report,
            }
        })
        .collect();
    let mut summary = Summary {
        instances: reports.len(),
        ..Default::default()
    };
    for r in reports {
        summary.inconclusive += r.report.inconclusive;
        summary.disagreements += r.report.disagreements.len();
        if !r.report.disagreements.is_empty() {
            summary.failing.push(r);
        }
    }
    summary.failing.sort_by_key(|r| r.seed);
    summary
}

fn without(a: &Automaton, skip: usize) -> Automaton {
    let kept: Vec<Transition> = a
        .transitions()
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != skip)
        .map(|(_, t)| *t)
        .collect();
    a.with_transitions(kept)
        .expect("subset of valid transitions")
}

/// Greedily delete transitions while `keep` still holds.
pub fn minimize(sys: &System, keep: impl Fn(&System) -> bool) -> System {
    let mut cur = sys.clone();
    'outer: loop {
        for role in 0..2 {
            let n = if role == 0 {
                cur.leader().transitions().len()
            } else {
                cur.contributor().transitions().len()
            };
            for k in 0..n {
                let (leader, contributor) = if role == 0 {
                    (without(cur.leader(), k), cur.contributor().clone())
                } else {
                    (cur.leader().clone(), without(cur.contributor(), k))
                };
                let cand = System::new(
                    cur.symbol_names().to_vec(),
                    cur.initial_value(),
                    leader,
                    contributor,
                    cur.final_states(),
                )
                .expect("same names and finals");
                if keep(&cand) {
                    cur = cand;
                    continue 'outer;
                }
            }
        }
        return cur;
    }
}

/// Minimize `sys` while `check_system` still reports `check`.
pub fn minimize_disagreement(sys: &System, check: Check, opts: &CrosscheckOptions) -> System {
    minimize(sys, |s| {
        check_system(s, opts)
            .disagreements
            .iter()
            .any(|d| d.check == check)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::corpus_params;
    use crate::model::fixtures::*;

    #[test]
    fn named_systems_agree() {
        let opts = CrosscheckOptions::default();
        for s in [sys1(), sys2()] {
            assert_eq!(check_system(&s, &opts).disagreements, vec![]);
        }
    }

    #[test]
    fn small_corpus_agrees() {
        let s = run(1..=20, corpus_params, &CrosscheckOptions::default());
        assert_eq!(s.instances, 20);
        assert!(s.failing.is_empty(), "{:#?}", s.failing);
    }

    #[test]
    fn minimize_drops_irrelevant_transitions() {
        let s = sys1().with_final_names(&["q1"]).unwrap();
        let m = minimize(&s, |x| crate::subsets::lcr_subsets(x).reachable);
        assert_eq!(m.leader().transitions().len(), 1);
        assert_eq!(m.contributor().transitions().len(), 1);
    }
}
