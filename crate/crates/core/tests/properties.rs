use meterfuse::montecarlo::estimate_with;
use meterfuse::{
    exact_error, ChannelSpec, DecisionRule, Execution, FusionNetwork, NetworkTopology,
    StateMatrix,
};
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = (Vec<usize>, Vec<Vec<bool>>, Vec<bool>, f64, f64)> {
    (prop::collection::vec(1usize..=4, 1..=3), 1usize..=6).prop_flat_map(|(sizes, slots)| {
        let meters: usize = sizes.iter().sum();
        (
            Just(sizes),
            prop::collection::vec(prop::collection::vec(any::<bool>(), meters), slots),
            prop::collection::vec(any::<bool>(), slots),
            0.0..=0.5f64,
            0.0..=0.5f64,
        )
    })
}

fn net(sizes: &[usize], p1: f64, p2: f64, agg: DecisionRule, op: DecisionRule) -> FusionNetwork {
    FusionNetwork::new(
        NetworkTopology::new(sizes.to_vec()).unwrap(),
        ChannelSpec::new(p1, p2).unwrap(),
        agg,
        op,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn de_morgan_symmetry((sizes, bits, truth, p1, p2) in instance()) {
        let flipped_bits = bits.iter().map(|s| s.iter().map(|b| !b).collect()).collect();
        let flipped_truth = truth.iter().map(|b| !b).collect();
        let states = StateMatrix::from_bits(bits, truth).unwrap();
        let flipped = StateMatrix::from_bits(flipped_bits, flipped_truth).unwrap();
        let and = exact_error(&net(&sizes, p1, p2, DecisionRule::And, DecisionRule::And), &states).unwrap();
        let or = exact_error(&net(&sizes, p1, p2, DecisionRule::Or, DecisionRule::Or), &flipped).unwrap();
        prop_assert!((and.p_er - or.p_er).abs() < 1e-12);
    }

    #[test]
    fn exact_is_deterministic((sizes, bits, truth, p1, p2) in instance()) {
        let states = StateMatrix::from_bits(bits, truth).unwrap();
        let n = net(&sizes, p1, p2, DecisionRule::Majority, DecisionRule::Majority);
        let a = exact_error(&n, &states).unwrap();
        let b = exact_error(&n, &states).unwrap();
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn estimator_is_consistent((sizes, bits, truth, p1, p2) in instance(), seed in any::<u64>()) {
        let states = StateMatrix::from_bits(bits, truth).unwrap();
        let n = net(&sizes, p1, p2, DecisionRule::Majority, DecisionRule::Or);
        let exact = exact_error(&n, &states).unwrap().p_er;
        let mc = estimate_with(&n, &states, 20_000, seed, Execution::Sequential).unwrap();
        // 5 SE plus a floor for the zero-variance case
        prop_assert!((mc.p_er_mean - exact).abs() <= 5.0 * mc.p_er_std_err + 1e-12,
            "mc {} ± {} vs exact {}", mc.p_er_mean, mc.p_er_std_err, exact);
    }
}
