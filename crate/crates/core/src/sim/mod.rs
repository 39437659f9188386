//! Exact simulation of the finite-`N` process.
//!
//! Every item jumps at the times of an independent Poisson clock of rate
//! `w_i`. The superposition is simulated directly: waiting times are
//! `Exp(Σ w)` and the jumper is drawn from `w_i / Σ w` with an alias table.
//!
//! # Seeds
//!
//! All samplers take an explicit `u64` seed. Replica `r` of a run seeded
//! with `s` draws from `ChaCha8Rng::seed_from_u64(replica_seed(s, r))`, so a
//! single replica can be replayed on its own. Replicas run in parallel and
//! are reduced in replica order.

mod order;
mod state;

pub use order::{is_permutation, ArrayOrder, FenwickOrder, ListOrder};
pub use state::{ArrayRankingState, Event, RankingState, RateTable};

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp1};
use rayon::prelude::*;
use thiserror::Error;

use crate::hydro::HydroError;
use crate::rates::DiscreteLaw;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("initial order is not a permutation of the items")]
    NotPermutation,
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("rate {0} is not an atom of the bucket law")]
    BucketMismatch(f64),
    #[error(transparent)]
    Hydro(#[from] HydroError),
}

type Result<T> = std::result::Result<T, SimError>;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replica `r`: `splitmix64(seed ^ splitmix64(r))`.
pub fn replica_seed(seed: u64, r: u64) -> u64 {
    splitmix64(seed ^ splitmix64(r))
}

pub fn replica_rng(seed: u64, r: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(replica_seed(seed, r))
}

/// A draw from the stationary law of the order: items sorted by
/// `E_i / w_i` with independent `E_i ~ Exp(1)`. Equivalent to picking items
/// one by one without replacement with probability proportional to rate.
pub fn sample_stationary_order(rates: &[f64], seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    stationary_order_with(rates, &mut rng)
}

pub fn stationary_order_with<R: Rng + ?Sized>(rates: &[f64], rng: &mut R) -> Vec<usize> {
    let keys: Vec<f64> = rates
        .iter()
        .map(|w| {
            let e: f64 = Exp1.sample(rng);
            e / w
        })
        .collect();
    let mut order: Vec<usize> = (0..rates.len()).collect();
    order.sort_by(|&i, &j| keys[i].total_cmp(&keys[j]));
    order
}

/// Mean of replica values with its standard error (`None` for one replica).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: Option<f64>,
    pub reps: usize,
}

impl Estimate {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let se = (n > 1).then(|| {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        });
        Self { mean, se, reps: n }
    }

    /// Replica standard deviation.
    pub fn sd(&self) -> Option<f64> {
        self.se.map(|s| s * (self.reps as f64).sqrt())
    }
}

/// How the list is arranged at time 0 in transient runs.
#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    /// `order[k]` at position `k + 1` in every replica.
    Given(Vec<usize>),
    /// A fresh uniformly random order per replica.
    Shuffled,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CostMode {
    /// Requests in the stationary regime.
    Stationary,
    /// One request at time `t` after starting from `start`.
    Transient { t: f64, start: Start },
}

/// Search costs (positions before the move) with the rates of the
/// requested items.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchCostSamples {
    pub mode: CostMode,
    pub n: usize,
    pub seed: u64,
    pub costs: Vec<usize>,
    pub rates: Vec<f64>,
}

impl SearchCostSamples {
    /// Fraction of samples with `cost / n > x`.
    pub fn tail(&self, x: f64) -> Estimate {
        let n = self.n as f64;
        let hits: Vec<f64> = self
            .costs
            .iter()
            .map(|&c| f64::from(u8::from(c as f64 / n > x)))
            .collect();
        Estimate::from_values(&hits)
    }

    /// Mean of `cost / n`.
    pub fn mean_scaled(&self) -> Estimate {
        let n = self.n as f64;
        let v: Vec<f64> = self.costs.iter().map(|&c| c as f64 / n).collect();
        Estimate::from_values(&v)
    }

    /// `sup_x |P̂(cost/n > x) - tail(x)|` over `grid`.
    pub fn ks_distance<F: FnMut(f64) -> f64>(&self, grid: &[f64], mut tail: F) -> f64 {
        let n = self.n as f64;
        let mut scaled: Vec<f64> = self.costs.iter().map(|&c| c as f64 / n).collect();
        scaled.sort_by(f64::total_cmp);
        let total = scaled.len() as f64;
        grid.iter()
            .map(|&x| {
                let above = scaled.len() - scaled.partition_point(|&v| v <= x);
                (above as f64 / total - tail(x)).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Distinct rates with their multiplicities, for grouped rank counting.
fn rate_groups(rates: &[f64]) -> (Vec<f64>, Vec<u64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..rates.len()).collect();
    idx.sort_by(|&i, &j| rates[i].total_cmp(&rates[j]));
    let mut values = Vec::new();
    let mut counts = Vec::new();
    let mut group_of = vec![0; rates.len()];
    for &i in &idx {
        if values.last() != Some(&rates[i]) {
            values.push(rates[i]);
            counts.push(0);
        }
        *counts.last_mut().expect("group") += 1;
        group_of[i] = values.len() - 1;
    }
    (values, counts, group_of)
}

/// Above this many items per distinct rate, rank counts use binomials.
const BINOMIAL_GROUP_MIN: u64 = 32;

/// Stationary search cost of one request: the requested item `i` sits
/// below every `j` with `E_j / w_j < E_i / w_i`.
fn stationary_cost<R: Rng + ?Sized>(
    table: &RateTable,
    groups: &(Vec<f64>, Vec<u64>, Vec<usize>),
    grouped: bool,
    rng: &mut R,
) -> (usize, f64) {
    let rates = table.rates();
    let i = table.sample_item(rng);
    let e: f64 = Exp1.sample(rng);
    let key = e / rates[i];
    let mut above = 0u64;
    if grouped {
        let (values, counts, group_of) = groups;
        for (g, (&w, &c)) in values.iter().zip(counts).enumerate() {
            let c = if g == group_of[i] { c - 1 } else { c };
            if c == 0 {
                continue;
            }
            let p = -(-w * key).exp_m1();
            above += Binomial::new(c, p.min(1.0))
                .expect("valid binomial")
                .sample(rng);
        }
    } else {
        for (j, &w) in rates.iter().enumerate() {
            if j != i {
                let ej: f64 = Exp1.sample(rng);
                if ej < w * key {
                    above += 1;
                }
            }
        }
    }
    (1 + above as usize, rates[i])
}

/// Draws `reps` independent search costs.
///
/// Stationary mode draws the requested item and the items ahead of it from
/// the stationary order directly, without building the full permutation.
/// Transient mode simulates the list from `start` up to `t` in each replica.
pub fn sample_search_costs(
    rates: &[f64],
    mode: CostMode,
    reps: usize,
    seed: u64,
) -> Result<SearchCostSamples> {
    if reps == 0 {
        return Err(SimError::Domain("reps must be at least 1".into()));
    }
    let table = RateTable::new(rates.to_vec())?;
    let n = rates.len();
    let pairs: Vec<(usize, f64)> = match &mode {
        CostMode::Stationary => {
            let groups = rate_groups(rates);
            let grouped =
                groups.1.iter().sum::<u64>() >= BINOMIAL_GROUP_MIN * groups.0.len() as u64;
            (0..reps)
                .into_par_iter()
                .map(|r| {
                    stationary_cost(&table, &groups, grouped, &mut replica_rng(seed, r as u64))
                })
                .collect()
        }
        CostMode::Transient { t, start } => {
            if !(*t >= 0.0 && t.is_finite()) {
                return Err(SimError::Domain(format!(
                    "time must be finite and non-negative, got {t}"
                )));
            }
            if let Start::Given(order) = start {
                if order.len() != n || !is_permutation(order) {
                    return Err(SimError::NotPermutation);
                }
            }
            (0..reps)
                .into_par_iter()
                .map(|r| {
                    let mut rng = replica_rng(seed, r as u64);
                    let mut state = start_state(&table, start, &mut rng);
                    state.step_until(*t, &mut rng);
                    let (item, pos) = state.sample_request(&mut rng);
                    (pos, rates[item])
                })
                .collect()
        }
    };
    let (costs, req_rates) = pairs.into_iter().unzip();
    Ok(SearchCostSamples {
        mode,
        n,
        seed,
        costs,
        rates: req_rates,
    })
}

fn start_state<R: Rng + ?Sized>(
    table: &Arc<RateTable>,
    start: &Start,
    rng: &mut R,
) -> RankingState {
    let order = match start {
        Start::Given(order) => order.clone(),
        Start::Shuffled => {
            let mut o: Vec<usize> = (0..table.len()).collect();
            o.shuffle(rng);
            o
        }
    };
    RankingState::with_table(Arc::clone(table), &order).expect("validated order")
}

/// `y_C^(N)(t)` on `t_grid` for each of `reps` replicas (rows), starting
/// from `start`.
pub fn boundary_trace(
    rates: &[f64],
    start: &Start,
    t_grid: &[f64],
    reps: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if reps == 0 {
        return Err(SimError::Domain("reps must be at least 1".into()));
    }
    if t_grid.windows(2).any(|w| !(w[0] < w[1])) || t_grid.first().is_some_and(|t| !(*t >= 0.0)) {
        return Err(SimError::Domain(
            "time grid must be non-negative and strictly increasing".into(),
        ));
    }
    let table = RateTable::new(rates.to_vec())?;
    Ok((0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r as u64);
            let mut state = start_state(&table, start, &mut rng);
            t_grid
                .iter()
                .map(|&t| {
                    state.step_until(t, &mut rng);
                    state.jumped_fraction()
                })
                .collect()
        })
        .collect())
}

/// `U_α^(N)(y) = (1/N) #{items below position N y with rate f_α}`,
/// indexed like the atoms of `buckets`.
pub fn empirical_tail<O: ListOrder>(
    state: &RankingState<O>,
    y: f64,
    buckets: &DiscreteLaw,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&y) {
        return Err(SimError::Domain(format!(
            "position must lie in [0, 1], got {y}"
        )));
    }
    let n = state.n();
    let mut counts = vec![0usize; buckets.atoms().len()];
    let first = (n as f64 * y).floor() as usize + 1;
    for pos in first..=n {
        let w = state.rates()[state.item_at(pos)];
        let k = buckets.index_of(w).ok_or(SimError::BucketMismatch(w))?;
        counts[k] += 1;
    }
    Ok(counts.into_iter().map(|c| c as f64 / n as f64).collect())
}

/// `M^(N)(t)`: the probability that the item requested at time `t` has
/// not been requested before, over `reps` independent runs.
pub fn empirical_miss(rates: &[f64], t: f64, reps: usize, seed: u64) -> Result<Estimate> {
    if reps == 0 {
        return Err(SimError::Domain("reps must be at least 1".into()));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(SimError::Domain(format!(
            "time must be finite and non-negative, got {t}"
        )));
    }
    let table = RateTable::new(rates.to_vec())?;
    let identity: Vec<usize> = (0..rates.len()).collect();
    let misses: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r as u64);
            let mut state =
                RankingState::with_table(Arc::clone(&table), &identity).expect("identity order");
            state.step_until(t, &mut rng);
            let (item, _) = state.sample_request(&mut rng);
            f64::from(u8::from(!state.has_jumped(item)))
        })
        .collect();
    Ok(Estimate::from_values(&misses))
}

#[cfg(test)]
mod tests;
