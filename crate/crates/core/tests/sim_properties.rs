use proptest::prelude::*;
use rankflow::sim::{
    self, is_permutation, ArrayOrder, CostMode, FenwickOrder, ListOrder, RankingState, Start,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

proptest! {
    #[test]
    fn fenwick_matches_array_order(n in 1usize..40, moves in prop::collection::vec(0usize..1000, 0..300)) {
        let start: Vec<usize> = (0..n).rev().collect();
        let mut fast = FenwickOrder::new(&start);
        let mut slow = ArrayOrder::new(&start);
        for m in moves {
            let item = m % n;
            prop_assert_eq!(fast.move_to_front(item), slow.move_to_front(item));
        }
        prop_assert_eq!(fast.items(), slow.items());
        for item in 0..n {
            prop_assert_eq!(fast.position(item), slow.position(item));
        }
        prop_assert!(is_permutation(&fast.items()));
    }

    #[test]
    fn simulators_agree_for_same_seed(rates in prop::collection::vec(0.1f64..5.0, 1..30), t in 0.0f64..3.0, seed in any::<u64>()) {
        let order: Vec<usize> = (0..rates.len()).collect();
        let mut a = RankingState::new(rates.clone(), &order).unwrap();
        let mut b = RankingState::new_array(rates, &order).unwrap();
        a.step_until(t, &mut sim::replica_rng(seed, 0));
        b.step_until(t, &mut sim::replica_rng(seed, 0));
        prop_assert_eq!(a.order(), b.order());
        prop_assert_eq!(a.events(), b.events());
        prop_assert_eq!(a.jumped_fraction(), b.jumped_fraction());
    }

    #[test]
    fn stationary_order_is_a_permutation(rates in prop::collection::vec(1e-3f64..1e3, 1..50), seed in any::<u64>()) {
        prop_assert!(is_permutation(&sim::sample_stationary_order(&rates, seed)));
    }
}

#[test]
fn boundary_trace_is_monotone_in_time() {
    let rates: Vec<f64> = (1..=100).map(|i| i as f64 / 50.0).collect();
    let ts = [0.1, 0.3, 1.0, 3.0, 10.0];
    let trace = sim::boundary_trace(&rates, &Start::Shuffled, &ts, 50, 4).unwrap();
    for row in &trace {
        assert!(row.windows(2).all(|w| w[0] <= w[1]), "{row:?}");
        assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn costs_are_valid_positions() {
    let rates: Vec<f64> = (1..=64).map(|i| (i % 5 + 1) as f64).collect();
    for mode in [
        CostMode::Stationary,
        CostMode::Transient {
            t: 0.7,
            start: Start::Shuffled,
        },
    ] {
        let s = sim::sample_search_costs(&rates, mode, 500, 8).unwrap();
        assert!(s.costs.iter().all(|&c| (1..=64).contains(&c)));
        assert!(s.rates.iter().all(|w| rates.contains(w)));
    }
}

/// Evolving a stationary draw leaves the law of the order unchanged.
#[test]
fn stationary_order_is_invariant_under_dynamics() {
    let rates = vec![0.5, 1.0, 1.0, 2.0, 3.0, 0.25, 4.0, 1.5];
    let n = rates.len();
    let draws = 40_000u64;
    let heavy = 6;
    let mut before = vec![0u64; n];
    let mut after = vec![0u64; n];
    for r in 0..draws {
        let order = sim::sample_stationary_order(&rates, sim::replica_seed(21, r));
        before[order.iter().position(|&i| i == heavy).unwrap()] += 1;
        let start = sim::sample_stationary_order(&rates, sim::replica_seed(22, r));
        let mut state = RankingState::new(rates.clone(), &start).unwrap();
        state.step_until(2.0, &mut sim::replica_rng(23, r));
        after[state.position(heavy) - 1] += 1;
    }
    let stat: f64 = before
        .iter()
        .zip(&after)
        .filter(|(a, b)| **a + **b > 0)
        .map(|(&a, &b)| (a as f64 - b as f64).powi(2) / (a + b) as f64)
        .sum();
    let cells = before
        .iter()
        .zip(&after)
        .filter(|(a, b)| **a + **b > 0)
        .count();
    let crit = ChiSquared::new((cells - 1) as f64)
        .unwrap()
        .inverse_cdf(0.999);
    assert!(
        stat <= crit,
        "chi-square {stat} > {crit}: {before:?} vs {after:?}"
    );
}
