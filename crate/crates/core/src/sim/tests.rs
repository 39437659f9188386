use super::*;
use crate::hydro::InitialProfile;
use crate::rates::{EmpiricalMode, RateLaw};
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn single_item_never_moves() {
    let mut s = RankingState::in_index_order(vec![3.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let events = s.step_until(10.0, &mut rng);
    assert!(events > 0);
    assert_eq!(s.position(0), 1);
    assert_eq!(s.clock(), 10.0);
}

#[test]
fn construction() {
    let s = RankingState::new(vec![1.0, 1.0, 1.0], &[0, 1, 2]).unwrap();
    assert_eq!(s.rate_sum(), 3.0);
    assert_eq!(s.clock(), 0.0);
    assert_eq!(
        RankingState::new(vec![1.0, 1.0], &[0, 0]).unwrap_err(),
        SimError::NotPermutation
    );
    assert_eq!(
        RankingState::new(vec![1.0, 1.0], &[0]).unwrap_err(),
        SimError::NotPermutation
    );
    assert!(RankingState::in_index_order(vec![1.0, 0.0]).is_err());

    let fresh = InitialProfile::fresh(&RateLaw::point(1.0).unwrap()).unwrap();
    let s = RankingState::from_profile(&fresh, 100, 5).unwrap();
    assert!(s.rates().iter().all(|&w| w == 1.0));
    assert_eq!(s.order(), (0..100).collect::<Vec<_>>());

    let n = 10_000;
    let w = RateLaw::pareto(1.0, 2.0)
        .unwrap()
        .rate_vector(n, EmpiricalMode::Quantile)
        .unwrap();
    let direct: f64 = (1..=n).map(|i| (n as f64 / i as f64).sqrt()).sum();
    let s = RankingState::in_index_order(w).unwrap();
    assert!((s.rate_sum() - direct).abs() < 1e-9 * direct);
}

#[test]
fn profile_blocks_fill_their_positions() {
    let law = |w: f64| match RateLaw::point(w).unwrap() {
        RateLaw::Discrete(d) => d,
        _ => unreachable!(),
    };
    let p = InitialProfile::new(vec![
        crate::hydro::Block {
            lo: 0.0,
            hi: 0.3,
            mix: law(1.0),
        },
        crate::hydro::Block {
            lo: 0.3,
            hi: 1.0,
            mix: law(2.0),
        },
    ])
    .unwrap();
    let s = RankingState::from_profile(&p, 10, 0).unwrap();
    assert_eq!(
        s.rates(),
        &[1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0]
    );
}

#[test]
fn every_event_moves_the_jumper_to_the_top() {
    let rates: Vec<f64> = (1..=20).map(|i| i as f64).collect();
    let mut s = RankingState::in_index_order(rates).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let before = s.order();
        let mut seen = None;
        let t = s.clock() + 0.01;
        s.step_until_observed(t, &mut rng, |e| {
            if seen.is_none() {
                seen = Some(e)
            }
        });
        if let Some(e) = seen {
            // replay just the first event on the snapshot
            let mut a = ArrayOrder::new(&before);
            assert_eq!(a.move_to_front(e.item), e.old_position);
            assert_eq!(a.position(e.item), 1);
            for (k, &i) in before.iter().enumerate() {
                let expected = if k + 1 < e.old_position {
                    k + 2
                } else if i == e.item {
                    1
                } else {
                    k + 1
                };
                assert_eq!(a.position(i), expected);
            }
        }
        assert!(is_permutation(&s.order()));
    }
}

#[test]
fn fenwick_state_matches_array_state() {
    for n in [1usize, 5, 17, 64] {
        let rates: Vec<f64> = (0..n).map(|i| 0.5 + (i % 7) as f64).collect();
        let order: Vec<usize> = (0..n).rev().collect();
        let mut fast = RankingState::new(rates.clone(), &order).unwrap();
        let mut slow = ArrayRankingState::new_array(rates, &order).unwrap();
        let mut ev_fast = Vec::new();
        let mut ev_slow = Vec::new();
        fast.step_until_observed(200.0, &mut ChaCha8Rng::seed_from_u64(9), |e| {
            ev_fast.push(e)
        });
        slow.step_until_observed(200.0, &mut ChaCha8Rng::seed_from_u64(9), |e| {
            ev_slow.push(e)
        });
        assert_eq!(ev_fast, ev_slow);
        assert_eq!(fast.order(), slow.order());
    }
}

#[test]
fn scale_covariance() {
    let rates: Vec<f64> = (1..=30).map(|i| 1.0 / i as f64).collect();
    let c = 4.0;
    let scaled: Vec<f64> = rates.iter().map(|w| w * c).collect();
    let mut a = RankingState::in_index_order(rates).unwrap();
    let mut b = RankingState::in_index_order(scaled).unwrap();
    let mut ea = Vec::new();
    let mut eb = Vec::new();
    a.step_until_observed(40.0, &mut ChaCha8Rng::seed_from_u64(2), |e| ea.push(e));
    b.step_until_observed(40.0 / c, &mut ChaCha8Rng::seed_from_u64(2), |e| eb.push(e));
    assert_eq!(ea.len(), eb.len());
    for (x, y) in ea.iter().zip(&eb) {
        assert_eq!((x.item, x.old_position), (y.item, y.old_position));
        assert!((x.time / c - y.time).abs() <= 1e-12 * x.time);
    }
}

#[test]
fn jump_counts_are_poisson() {
    let rates = vec![0.5, 1.0, 3.0];
    let horizon = 20.0;
    let reps = 400;
    let mut totals = vec![Vec::new(); 3];
    for r in 0..reps {
        let mut s = RankingState::in_index_order(rates.clone()).unwrap();
        let mut counts = [0.0; 3];
        s.step_until_observed(horizon, &mut replica_rng(77, r), |e| counts[e.item] += 1.0);
        for i in 0..3 {
            totals[i].push(counts[i]);
        }
    }
    for i in 0..3 {
        let est = Estimate::from_values(&totals[i]);
        let expected = rates[i] * horizon;
        let sigma = (expected / reps as f64).sqrt();
        assert!(
            (est.mean - expected).abs() < 3.0 * sigma,
            "item {i}: {} vs {expected}",
            est.mean
        );
    }
}

#[test]
fn stationary_order_examples() {
    assert_eq!(sample_stationary_order(&[2.5], 0), vec![0]);

    let draws = 100_000;
    let first: usize = (0..draws)
        .filter(|&r| sample_stationary_order(&[2.0, 1.0], replica_seed(4, r))[0] == 0)
        .count();
    let p = first as f64 / draws as f64;
    let sigma = (2.0 / 9.0 / draws as f64).sqrt();
    assert!((p - 2.0 / 3.0).abs() < 4.0 * sigma, "{p}");

    let mut counts = std::collections::HashMap::new();
    for r in 0..draws {
        *counts
            .entry(sample_stationary_order(
                &[1.0, 1.0, 1.0],
                replica_seed(8, r),
            ))
            .or_insert(0usize) += 1;
    }
    assert_eq!(counts.len(), 6);
    let expected = draws as f64 / 6.0;
    let chi2: f64 = counts
        .values()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let critical = ChiSquared::new(5.0).unwrap().inverse_cdf(0.99);
    assert!(chi2 < critical, "chi2 {chi2} vs {critical}");
}

#[test]
fn search_cost_basics() {
    let one = sample_search_costs(&[1.0], CostMode::Stationary, 50, 1).unwrap();
    assert!(one.costs.iter().all(|&c| c == 1));
    assert!(sample_search_costs(&[1.0], CostMode::Stationary, 0, 1).is_err());

    // equal rates: the cost is uniform on 1..=n
    let n = 50;
    let s = sample_search_costs(&vec![1.0; n], CostMode::Stationary, 20_000, 3).unwrap();
    for &x in &[0.1, 0.5, 0.9] {
        let est = s.tail(x);
        assert!((est.mean - (1.0 - x)).abs() < 4.0 * est.se.unwrap());
    }
    assert!(s.costs.iter().all(|&c| (1..=n).contains(&c)));
}

#[test]
fn grouped_and_itemwise_rank_counts_agree() {
    // 40 items per rate takes the binomial path; 3 per rate the item-wise one
    let grouped: Vec<f64> = (0..80)
        .map(|i| if i % 2 == 0 { 1.0 } else { 2.0 })
        .collect();
    let itemwise: Vec<f64> = (0..80)
        .map(|i| if i % 2 == 0 { 1.0 } else { 2.0 } + (i / 2 % 27) as f64 * 1e-12)
        .collect();
    let a = sample_search_costs(&grouped, CostMode::Stationary, 40_000, 5).unwrap();
    let b = sample_search_costs(&itemwise, CostMode::Stationary, 40_000, 6).unwrap();
    let (ma, mb) = (a.mean_scaled(), b.mean_scaled());
    let se = (ma.se.unwrap().powi(2) + mb.se.unwrap().powi(2)).sqrt();
    assert!((ma.mean - mb.mean).abs() < 4.0 * se);
}

#[test]
fn transient_at_time_zero_reads_the_start_order() {
    let rates = vec![1.0, 2.0, 3.0, 4.0];
    let order = vec![3, 1, 0, 2];
    let s = sample_search_costs(
        &rates,
        CostMode::Transient {
            t: 0.0,
            start: Start::Given(order.clone()),
        },
        200,
        2,
    )
    .unwrap();
    for (&c, &w) in s.costs.iter().zip(&s.rates) {
        let item = rates.iter().position(|&x| x == w).unwrap();
        assert_eq!(order[c - 1], item);
    }
    let bad = sample_search_costs(
        &rates,
        CostMode::Transient {
            t: 0.0,
            start: Start::Given(vec![0, 1]),
        },
        1,
        0,
    );
    assert_eq!(bad.unwrap_err(), SimError::NotPermutation);
}

#[test]
fn boundary_and_miss_edges() {
    let rates = vec![1.0; 16];
    let trace = boundary_trace(&rates, &Start::Shuffled, &[0.0, 1.0], 3, 0).unwrap();
    assert!(trace.iter().all(|row| row[0] == 0.0 && row[1] >= 0.0));
    assert!(boundary_trace(&rates, &Start::Shuffled, &[1.0, 0.5], 3, 0).is_err());
    let m = empirical_miss(&rates, 0.0, 10, 0).unwrap();
    assert_eq!(m.mean, 1.0);
    assert!(empirical_miss(&rates, 1.0, 1, 0).unwrap().se.is_none());
}

#[test]
fn empirical_tail_buckets() {
    let state = RankingState::in_index_order(vec![1.0, 2.0, 1.0, 2.0]).unwrap();
    let RateLaw::Discrete(buckets) = RateLaw::discrete(&[(1.0, 0.5), (2.0, 0.5)]).unwrap() else {
        unreachable!()
    };
    assert_eq!(
        empirical_tail(&state, 0.0, &buckets).unwrap(),
        vec![0.5, 0.5]
    );
    assert_eq!(
        empirical_tail(&state, 0.5, &buckets).unwrap(),
        vec![0.25, 0.25]
    );
    let RateLaw::Discrete(wrong) = RateLaw::point(1.0).unwrap() else {
        unreachable!()
    };
    assert_eq!(
        empirical_tail(&state, 0.0, &wrong).unwrap_err(),
        SimError::BucketMismatch(2.0)
    );
}

#[test]
fn replica_seeds_differ() {
    let seeds: std::collections::HashSet<u64> = (0..1000).map(|r| replica_seed(42, r)).collect();
    assert_eq!(seeds.len(), 1000);
    assert_ne!(replica_seed(1, 0), replica_seed(2, 0));
}
