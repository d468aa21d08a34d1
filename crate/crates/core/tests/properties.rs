use std::collections::BTreeMap;

use banzkp::adversary::node_complete;
use banzkp::costmodel::{expected_modexp_modmuls, modmul_cost, percent_reduction};
use banzkp::netsim::{build_routes, run, Record, Scenario, Topology};
use proptest::prelude::*;

const BITS: usize = 1096;

fn balanced(records: &[Record]) -> bool {
    let mut open: BTreeMap<u64, i32> = BTreeMap::new();
    for r in records {
        match r {
            Record::Sent { frame, .. } => *open.entry(*frame).or_default() += 1,
            Record::Delivered { frame, .. } | Record::Dropped { frame, .. } => {
                *open.entry(*frame).or_default() -= 1
            }
            _ => {}
        }
    }
    open.values().all(|v| *v == 0)
}

fn lossy(seed: u64, losses: &[f64]) -> Scenario {
    let mut s = Scenario::honest7(seed).with_modulus_bits(BITS);
    for (link, loss) in s.topology.links.iter_mut().zip(losses) {
        link.loss = *loss;
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn frames_are_conserved_under_loss(seed in any::<u64>(), losses in prop::collection::vec(0.0f64..0.6, 8)) {
        let t = run(&lossy(seed, &losses)).unwrap();
        prop_assert!(balanced(&t.records));
        let s = t.summary();
        prop_assert_eq!(s.frames_sent, s.frames_delivered + s.frames_dropped);
    }

    #[test]
    fn runs_are_pure_functions_of_the_scenario(seed in any::<u64>(), losses in prop::collection::vec(0.0f64..0.4, 8)) {
        let s = lossy(seed, &losses);
        let a = run(&s).unwrap();
        let b = run(&s).unwrap();
        prop_assert_eq!(a.digest(), b.digest());
        prop_assert_eq!(a.ledger, b.ledger);
    }

    #[test]
    fn delivered_data_is_never_altered(seed in any::<u64>(), losses in prop::collection::vec(0.0f64..0.5, 8)) {
        let t = run(&lossy(seed, &losses)).unwrap();
        let inputs: Vec<_> = t.app_inputs().map(|(_, n, d)| (n, d.to_vec())).collect();
        for (_, n, d) in t.deliveries() {
            prop_assert!(inputs.contains(&(n, d.to_vec())));
        }
    }

    #[test]
    fn chains_and_stars_complete(seed in any::<u64>(), n in 1u8..8, chain in any::<bool>()) {
        let mut s = Scenario::honest7(seed).with_modulus_bits(BITS);
        s.topology = if chain { Topology::chain(n) } else { Topology::star(n) };
        s.traffic.retain(|x| x.node <= n);
        let t = run(&s).unwrap();
        let want = build_routes(&s.topology).unwrap();
        for id in s.topology.sensors() {
            prop_assert_eq!(t.routes.hops(id), want.hops(id));
        }
        for x in &s.traffic {
            prop_assert!(node_complete(&t, x.node), "node {}", x.node);
        }
    }

    #[test]
    fn modmul_cost_grows_with_key_count(t in 1u64..50, k in 0u64..200) {
        prop_assert!(modmul_cost(t, k + 2) == modmul_cost(t, k) + t);
        prop_assert!(modmul_cost(t, k) <= modmul_cost(t + 1, k));
    }

    #[test]
    fn square_and_multiply_bound(bits in 2u64..4096) {
        let m = expected_modexp_modmuls(bits);
        prop_assert!(m >= bits - 1 && m <= 2 * bits);
    }

    #[test]
    fn reduction_is_bounded(ours in 0.0f64..1e6, extra in 0.0f64..1e6) {
        let r = percent_reduction(ours, ours + extra + 1.0);
        prop_assert!((0.0..=100.0).contains(&r));
    }
}
