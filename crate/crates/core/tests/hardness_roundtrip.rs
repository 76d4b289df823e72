use lcmin::hardness_gen::{recover_cover, reduce_set_cover, reduce_set_cover_duplex, SetCoverInstance};
use lcmin::lc_problems::{solve_instance, Algorithm, SolveOptions};
use lcmin::oracle::{brute_force_lc_mcfs, brute_force_set_cover, DEFAULT_STATE_BUDGET};
use lcmin_milp::{BranchAndBound, MilpStatus};
use proptest::prelude::*;

fn figure() -> SetCoverInstance {
    SetCoverInstance::from_labels(&[vec!["a", "b", "c"], vec!["c", "d"], vec!["b", "c"]]).unwrap()
}

fn solve_cover(sc: &SetCoverInstance, k: u64) -> (Vec<usize>, u64) {
    let r = reduce_set_cover(sc, k).unwrap();
    let out = solve_instance(&r.network, &r.demands, &SolveOptions::new(Algorithm::Mcf, r.params()), &BranchAndBound).unwrap();
    assert_eq!(out.status, MilpStatus::Optimal);
    assert!(out.verified(), "{:?}", out.verification.as_ref().map(|v| (v.residual, v.mlu, &v.findings)));
    let cover = recover_cover(&r, &out.state.as_ref().unwrap().masks);
    assert!(cover.partial.is_empty());
    assert!(sc.is_cover(&cover.sets));
    (cover.sets, out.objective().unwrap())
}

#[test]
fn figure_instance_yields_minimum_cover() {
    for k in 1..=3 {
        let (cover, _) = solve_cover(&figure(), k);
        assert_eq!(cover.len(), 2, "k={k}");
    }
}

#[test]
fn single_set_uses_one_chain() {
    let sc = SetCoverInstance::from_labels(&[vec!["a", "b"]]).unwrap();
    let (cover, obj) = solve_cover(&sc, 2);
    assert_eq!(cover, vec![0]);
    let r = reduce_set_cover(&sc, 2).unwrap();
    let (oracle, _) = brute_force_lc_mcfs(&r.network, &r.demands, 1.0, 2, DEFAULT_STATE_BUDGET).unwrap();
    assert_eq!(obj, oracle);
}

#[test]
fn duplex_reduction_is_cut_infeasible() {
    let r = reduce_set_cover_duplex(&figure(), 2).unwrap();
    let out = solve_instance(&r.network, &r.demands, &SolveOptions::new(Algorithm::Mcf, r.params()), &BranchAndBound).unwrap();
    assert_eq!(out.status, MilpStatus::Infeasible);
    assert!(out.state.is_none());
}

fn set_cover_strategy() -> impl Strategy<Value = SetCoverInstance> {
    (1usize..=4, 1usize..=4)
        .prop_flat_map(|(nu, sigma)| prop::collection::vec(prop::collection::btree_set(0..nu, 1..=nu), sigma).prop_map(move |sets| (nu, sets)))
        .prop_filter_map("family must cover the universe", |(nu, sets)| {
            let universe = (0..nu).map(|i| format!("i{i}")).collect();
            SetCoverInstance::new(universe, sets.into_iter().map(|s| s.into_iter().collect()).collect()).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn recovered_cover_is_minimum(sc in set_cover_strategy(), k in 1u64..=3) {
        let (cover, _) = solve_cover(&sc, k);
        prop_assert_eq!(cover.len(), brute_force_set_cover(&sc).unwrap());
    }
}
