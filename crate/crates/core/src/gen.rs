//! Seeded random systems.
//!
//! The generator draws from ChaCha8 seeded with `seed`. Leader transitions
//! are drawn first, then contributor transitions: for every source state,
//! every target state and every operation in the order `eps`, `?d0 ..`,
//! `!d0 ..`, one uniform draw in `[0, 1)` decides inclusion (`< density`).
//! Then one draw per leader state decides finality (`< final_fraction`);
//! if no state is final, a uniformly drawn state is made final. Initial
//! states are `q0` and `c0`, the initial value is `d0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{BitSet, MAX_BITS};
use crate::model::{Automaton, MemOp, System, Transition};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("{0} must be between 1 and {MAX_BITS}")]
    Count(&'static str),
    #[error("{0} must lie in (0, 1]")]
    Fraction(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub leader_states: usize,
    pub contributor_states: usize,
    pub domain_size: usize,
    pub density: f64,
    pub final_fraction: f64,
    pub seed: u64,
}

impl GenParams {
    pub fn validate(&self) -> Result<(), GenError> {
        for (name, n) in [
            ("leader_states", self.leader_states),
            ("contributor_states", self.contributor_states),
            ("domain_size", self.domain_size),
        ] {
            if n == 0 || n > MAX_BITS {
                return Err(GenError::Count(name));
            }
        }
        for (name, f) in [
            ("density", self.density),
            ("final_fraction", self.final_fraction),
        ] {
            if !(f > 0.0 && f <= 1.0) {
                return Err(GenError::Fraction(name));
            }
        }
        Ok(())
    }
}

/// Parameters of the standard corpus: seeds cycle through up to 3 leader
/// states, up to 3 contributor states, up to 2 symbols and densities
/// 0.2, 0.4 and 0.7.
pub fn corpus_params(seed: u64) -> GenParams {
    const DENSITIES: [f64; 3] = [0.2, 0.4, 0.7];
    GenParams {
        leader_states: 1 + (seed % 3) as usize,
        contributor_states: 1 + (seed / 3 % 3) as usize,
        domain_size: 1 + (seed / 9 % 2) as usize,
        density: DENSITIES[(seed / 18 % 3) as usize],
        final_fraction: 0.5,
        seed,
    }
}

fn ops(d: usize) -> impl Iterator<Item = MemOp> {
    std::iter::once(MemOp::Eps)
        .chain((0..d).map(MemOp::Read))
        .chain((0..d).map(MemOp::Write))
}

fn draw_transitions(rng: &mut ChaCha8Rng, n: usize, d: usize, density: f64) -> Vec<Transition> {
    let mut out = Vec::new();
    for from in 0..n {
        for to in 0..n {
            for op in ops(d) {
                if rng.gen::<f64>() < density {
                    out.push(Transition::new(from, op, to));
                }
            }
        }
    }
    out
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn generate_instance(p: &GenParams) -> Result<System, GenError> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let lt = draw_transitions(&mut rng, p.leader_states, p.domain_size, p.density);
    let ct = draw_transitions(&mut rng, p.contributor_states, p.domain_size, p.density);
    let mut finals: BitSet = (0..p.leader_states)
        .filter(|_| rng.gen::<f64>() < p.final_fraction)
        .collect();
    if finals.is_empty() {
        finals.insert(rng.gen_range(0..p.leader_states));
    }
    let leader = Automaton::new("leader", names("q", p.leader_states), 0, lt)
        .expect("generated leader is well formed");
    let contributor = Automaton::new("contributor", names("c", p.contributor_states), 0, ct)
        .expect("generated contributor is well formed");
    Ok(
        System::new(names("d", p.domain_size), 0, leader, contributor, finals)
            .expect("generated system is well formed"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(seed: u64, density: f64) -> GenParams {
        GenParams {
            leader_states: 3,
            contributor_states: 3,
            domain_size: 2,
            density,
            final_fraction: 0.5,
            seed,
        }
    }

    #[test]
    fn deterministic() {
        let a = generate_instance(&params(1, 0.4)).unwrap();
        assert_eq!(a, generate_instance(&params(1, 0.4)).unwrap());
        assert_ne!(a, generate_instance(&params(2, 0.4)).unwrap());
    }

    #[test]
    fn full_density() {
        let s = generate_instance(&params(5, 1.0)).unwrap();
        assert_eq!(s.leader().transitions().len(), 3 * 3 * (2 * 2 + 1));
        assert_eq!(s.contributor().transitions().len(), 3 * 3 * (2 * 2 + 1));
    }

    #[test]
    fn finals_nonempty() {
        for seed in 0..50 {
            let mut p = params(seed, 0.3);
            p.final_fraction = 0.01;
            assert!(!generate_instance(&p).unwrap().final_states().is_empty());
        }
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = params(1, 0.0);
        assert_eq!(p.validate(), Err(GenError::Fraction("density")));
        p.density = 0.5;
        p.domain_size = 0;
        assert_eq!(p.validate(), Err(GenError::Count("domain_size")));
    }

    #[test]
    fn corpus_ranges() {
        for seed in 1..=300 {
            let p = corpus_params(seed);
            assert!(p.leader_states <= 3 && p.contributor_states <= 3 && p.domain_size <= 2);
            p.validate().unwrap();
        }
    }
}
