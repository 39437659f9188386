use std::sync::Arc;

use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Exp1;

use super::order::{is_permutation, ArrayOrder, FenwickOrder, ListOrder};
use super::SimError;
use crate::hydro::InitialProfile;

/// One move-to-front event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    /// 0-based count of events since the state was built.
    pub index: u64,
    pub time: f64,
    pub item: usize,
    pub old_position: usize,
}

/// Request sampler shared by every state built on the same rates.
#[derive(Debug)]
pub struct RateTable {
    rates: Vec<f64>,
    rate_sum: f64,
    alias: WeightedAliasIndex<f64>,
}

impl RateTable {
    pub fn new(rates: Vec<f64>) -> Result<Arc<Self>, SimError> {
        if rates.is_empty() {
            return Err(SimError::Domain("need at least one item".into()));
        }
        if let Some(w) = rates.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(SimError::Domain(format!(
                "rates must be positive and finite, got {w}"
            )));
        }
        let rate_sum = crate::sum::neumaier(rates.iter().copied());
        let alias =
            WeightedAliasIndex::new(rates.clone()).map_err(|e| SimError::Domain(e.to_string()))?;
        Ok(Arc::new(Self {
            rates,
            rate_sum,
            alias,
        }))
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn rate_sum(&self) -> f64 {
        self.rate_sum
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// An item chosen with probability `w_i / Σ w`.
    pub fn sample_item<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.alias.sample(rng)
    }
}

/// Finite-`N` ranking process.
#[derive(Debug, Clone)]
pub struct RankingState<O: ListOrder = FenwickOrder> {
    table: Arc<RateTable>,
    order: O,
    clock: f64,
    events: u64,
    first_jump: Vec<f64>,
    jumped: usize,
}

/// Reference state backed by the plain array order.
pub type ArrayRankingState = RankingState<ArrayOrder>;

fn validated(table: &RateTable, order: &[usize]) -> Result<(), SimError> {
    if order.len() != table.len() || !is_permutation(order) {
        return Err(SimError::NotPermutation);
    }
    Ok(())
}

impl RankingState<FenwickOrder> {
    /// `order[k]` is the item at position `k + 1`.
    pub fn new(rates: Vec<f64>, order: &[usize]) -> Result<Self, SimError> {
        Self::with_table(RateTable::new(rates)?, order)
    }

    /// Items start in index order.
    pub fn in_index_order(rates: Vec<f64>) -> Result<Self, SimError> {
        let order: Vec<usize> = (0..rates.len()).collect();
        Self::new(rates, &order)
    }

    pub fn with_table(table: Arc<RateTable>, order: &[usize]) -> Result<Self, SimError> {
        validated(&table, order)?;
        Ok(Self::assemble(table, FenwickOrder::new(order)))
    }

    /// `n` items placed by `profile`: positions `k` with
    /// `⌈N y_lo⌉ <= k - 1 < ⌈N y_hi⌉` take independent rates from the
    /// block mixture, and item `i` starts at position `i + 1`.
    pub fn from_profile(profile: &InitialProfile, n: usize, seed: u64) -> Result<Self, SimError> {
        if n == 0 {
            return Err(SimError::Domain("need at least one item".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rates = Vec::with_capacity(n);
        let nf = n as f64;
        for b in profile.blocks() {
            let lo = (nf * b.lo).ceil() as usize;
            let hi = ((nf * b.hi).ceil() as usize).min(n);
            let atoms = b.mix.atoms();
            let pick = rand::distr::weighted::WeightedIndex::new(atoms.iter().map(|a| a.prob))
                .map_err(|e| SimError::Domain(e.to_string()))?;
            for _ in lo..hi {
                rates.push(atoms[pick.sample(&mut rng)].rate);
            }
        }
        debug_assert_eq!(rates.len(), n);
        Self::in_index_order(rates)
    }
}

impl RankingState<ArrayOrder> {
    pub fn new_array(rates: Vec<f64>, order: &[usize]) -> Result<Self, SimError> {
        let table = RateTable::new(rates)?;
        validated(&table, order)?;
        Ok(Self::assemble(table, ArrayOrder::new(order)))
    }
}

impl<O: ListOrder> RankingState<O> {
    fn assemble(table: Arc<RateTable>, order: O) -> Self {
        let n = table.len();
        Self {
            table,
            order,
            clock: 0.0,
            events: 0,
            first_jump: vec![f64::INFINITY; n],
            jumped: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.table.len()
    }

    pub fn table(&self) -> &Arc<RateTable> {
        &self.table
    }

    pub fn rates(&self) -> &[f64] {
        self.table.rates()
    }

    pub fn rate_sum(&self) -> f64 {
        self.table.rate_sum()
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn position(&self, item: usize) -> usize {
        self.order.position(item)
    }

    pub fn item_at(&self, pos: usize) -> usize {
        self.order.item_at(pos)
    }

    /// Items from position 1 downwards.
    pub fn order(&self) -> Vec<usize> {
        self.order.items()
    }

    /// Time of the first jump of `item`, `+∞` if it has not jumped.
    pub fn first_jump_time(&self, item: usize) -> f64 {
        self.first_jump[item]
    }

    pub fn has_jumped(&self, item: usize) -> bool {
        self.first_jump[item].is_finite()
    }

    /// `y_C^(N)` at the current clock: the fraction of items that have jumped.
    pub fn jumped_fraction(&self) -> f64 {
        self.jumped as f64 / self.n() as f64
    }

    /// Fraction of items that had jumped by time `t <= clock`.
    pub fn jumped_fraction_at(&self, t: f64) -> f64 {
        self.first_jump.iter().filter(|&&s| s <= t).count() as f64 / self.n() as f64
    }

    /// Runs the process until `t_end` and returns the number of events.
    pub fn step_until<R: Rng + ?Sized>(&mut self, t_end: f64, rng: &mut R) -> u64 {
        self.step_until_observed(t_end, rng, |_| {})
    }

    /// As [`step_until`](Self::step_until), reporting every event.
    pub fn step_until_observed<R, F>(&mut self, t_end: f64, rng: &mut R, mut observe: F) -> u64
    where
        R: Rng + ?Sized,
        F: FnMut(Event),
    {
        assert!(
            t_end >= self.clock,
            "t_end {t_end} is before the clock {}",
            self.clock
        );
        let start = self.events;
        let total = self.table.rate_sum();
        loop {
            let wait: f64 = Exp1.sample(rng);
            let next = self.clock + wait / total;
            if next > t_end {
                break;
            }
            self.clock = next;
            let item = self.table.sample_item(rng);
            let old_position = self.order.move_to_front(item);
            if self.first_jump[item].is_infinite() {
                self.first_jump[item] = next;
                self.jumped += 1;
            }
            observe(Event {
                index: self.events,
                time: next,
                item,
                old_position,
            });
            self.events += 1;
            if cfg!(debug_assertions) && self.events.is_multiple_of(4093) {
                assert!(
                    is_permutation(&self.order.items()),
                    "order lost bijectivity"
                );
            }
        }
        self.clock = t_end;
        self.events - start
    }

    /// Position of an item requested now, chosen with probability `w_i / Σ w`.
    pub fn sample_request<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let item = self.table.sample_item(rng);
        (item, self.order.position(item))
    }
}
