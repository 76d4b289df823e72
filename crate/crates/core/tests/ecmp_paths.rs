mod common;

use std::collections::BTreeMap;

use lcmin::igp_routing::{EcmpRouter, Rational};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fractions_match_path_enumeration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = common::random_weighted_graph(&mut rng, 7);
        let router = EcmpRouter::new(&net);
        for u in 0..net.num_vertices() {
            for w in 0..net.num_vertices() {
                let reference = common::ecmp_by_paths(&net, u, w);
                let got = router.unit_flow_exact(u, w).map(|r| {
                    r.unwrap().into_iter().filter(|e| e.1 != Rational::from_integer(0)).collect::<BTreeMap<_, _>>()
                });
                prop_assert_eq!(got, reference, "{} -> {}", u, w);
            }
        }
    }
}
