use proptest::prelude::*;

use lcs_core::cycle::{cyc, cyc_bruteforce, greatest_fixed_point, writes_scc};
use lcs_core::gen::{generate_instance, GenParams};
use lcs_core::semantics::{bounded_reach_oracle, Limits};
use lcs_core::subsets::{lcr_subsets, saturate_abstract};
use lcs_core::witness::{lcr_witness, Engine, Witness};
use lcs_core::{parse_system, serialize_system, BitSet, Interface, System};

fn params(max_l: usize, max_c: usize, max_d: usize) -> impl Strategy<Value = GenParams> {
    (
        1..=max_l,
        1..=max_c,
        1..=max_d,
        0.0..=1.0f64,
        0.0..=1.0f64,
        any::<u64>(),
    )
        .prop_map(|(l, c, d, density, final_fraction, seed)| GenParams {
            leader_states: l,
            contributor_states: c,
            domain_size: d,
            density,
            final_fraction,
            seed,
        })
}

fn system(max_l: usize, max_c: usize, max_d: usize) -> impl Strategy<Value = System> {
    params(max_l, max_c, max_d).prop_map(|p| generate_instance(&p).unwrap())
}

fn with_interface(max_d: usize) -> impl Strategy<Value = (System, Interface)> {
    system(3, 3, max_d).prop_flat_map(|sys| {
        let c = sys.contributor().state_count();
        let iface = (
            1u64..(1 << c),
            0..sys.leader().state_count(),
            0..sys.domain_size(),
        )
            .prop_map(|(mask, leader, memory)| Interface {
                contributors: BitSet::from_mask(mask),
                leader,
                memory,
            });
        (Just(sys), iface)
    })
}

fn witness() -> impl Strategy<Value = Witness> {
    (
        prop::collection::vec((0..5usize, prop::option::of(0..3usize)), 1..12),
        0..5usize,
    )
        .prop_flat_map(|(word, target)| {
            let n = word.len();
            (Just(word), Just(target), prop::collection::vec(0..n, 0..4))
        })
        .prop_map(|(word, target, mut sigma)| {
            sigma.sort_unstable();
            Witness::new(word, target, sigma).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialization_roundtrips(sys in system(4, 4, 4)) {
        let text = serialize_system(&sys);
        let back = parse_system(&text).unwrap();
        prop_assert_eq!(&back, &sys);
        prop_assert_eq!(serialize_system(&back), text);
    }

    #[test]
    fn generation_is_deterministic(p in params(4, 4, 3)) {
        prop_assert_eq!(generate_instance(&p).unwrap(), generate_instance(&p).unwrap());
    }

    #[test]
    fn saturation_respects_state_bound(sys in system(4, 5, 3)) {
        let tbl = saturate_abstract(&sys);
        prop_assert!(tbl.explored() as u128 <= tbl.bound());
        for s in tbl.states() {
            let trace = tbl.trace_to(s).unwrap();
            let mut prev = BitSet::singleton(sys.contributor().initial());
            for (_, st) in &trace {
                prop_assert!(prev.is_subset(st.contributors));
                prev = st.contributors;
            }
        }
    }

    #[test]
    fn shrink_star_is_idempotent(w in witness()) {
        let z = w.shrink_star();
        prop_assert!(z.is_short());
        prop_assert_eq!(z.shrink_star(), z.clone());
        prop_assert_eq!(z.order(), w.order());
        prop_assert_eq!(z.target, w.target);
        prop_assert!(z.sigma.windows(2).all(|p| p[0] <= p[1]));
        prop_assert!(z.sigma.iter().all(|&s| s < z.len()));
        let mut step = w.clone();
        while !step.is_short() {
            step = step.shrink();
        }
        prop_assert_eq!(step, z);
    }

    #[test]
    fn writes_is_monotone((sys, i) in with_interface(4), a in any::<u64>(), b in any::<u64>()) {
        let dom = sys.domain().mask();
        let small = BitSet::from_mask(a & b & dom);
        let big = BitSet::from_mask(a & dom);
        prop_assert!(writes_scc(&sys, &i, small).is_subset(writes_scc(&sys, &i, big)));
    }

    #[test]
    fn fixpoint_matches_enumeration((sys, i) in with_interface(4)) {
        let res = cyc(&sys, &i);
        prop_assert_eq!(res.holds, cyc_bruteforce(&sys, &i).unwrap());
        let (gfp, chain) = greatest_fixed_point(&sys, &i);
        prop_assert!(chain.len() <= sys.domain_size() + 1);
        prop_assert!(chain.windows(2).all(|w| w[1].is_subset(w[0]) && w[1] != w[0]));
        prop_assert_eq!(writes_scc(&sys, &i, gfp), gfp);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn engines_agree_on_reachability(sys in system(3, 3, 2)) {
        let subsets = lcr_subsets(&sys).reachable;
        let witness = lcr_witness(&Engine::new(&sys).unwrap()).unwrap().reachable;
        prop_assert_eq!(subsets, witness);
        let limits = Limits::default();
        for t in 1..=2 {
            if bounded_reach_oracle(&sys, sys.final_states(), t, &limits).unwrap().found {
                prop_assert!(subsets);
            }
        }
    }
}
