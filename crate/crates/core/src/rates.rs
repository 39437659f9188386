//! Jump-rate distributions `λ` and their transforms.
//!
//! Three families are supported:
//!
//! * [`DiscreteLaw`]: `λ = Σ ρ_α δ_{f_α}` with finitely many atoms.
//! * [`ParetoLaw`]: `λ([0, w]) = 1 - (a / w)^b` for `w >= a`.
//! * [`EmpiricalLaw`]: the empirical measure `(1/N) Σ δ_{w_i}` of a rate vector.
//!
//! Every law puts no mass at zero. Laws are immutable once built and can be
//! shared across threads. Divergent quantities (an infinite mean, say) are
//! reported as `f64::INFINITY` by the transforms and rejected by operations
//! that need them to be finite.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::specfun::{self, QuadOptions, SpecFunError};
use crate::sum::{neumaier, Neumaier};

/// Probabilities of a discrete law must sum to one within this.
pub const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("invalid rate law: {0}")]
    Invalid(String),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("the jump-rate law has an infinite mean")]
    DivergentMean,
    #[error(transparent)]
    Numeric(#[from] SpecFunError),
}

/// One atom `(f_α, ρ_α)` of a discrete law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub rate: f64,
    pub prob: f64,
}

impl Atom {
    pub fn new(rate: f64, prob: f64) -> Self {
        Self { rate, prob }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaw {
    atoms: Vec<Atom>,
    /// Atom indices in increasing rate order.
    by_rate: Vec<usize>,
}

impl DiscreteLaw {
    pub fn new(atoms: Vec<Atom>) -> Result<Self, RateError> {
        if atoms.is_empty() {
            return Err(RateError::Invalid("discrete law without atoms".into()));
        }
        for a in &atoms {
            if !(a.rate > 0.0 && a.rate.is_finite()) {
                return Err(RateError::Invalid(format!(
                    "atom rate {} must be positive and finite",
                    a.rate
                )));
            }
            if !(a.prob > 0.0 && a.prob.is_finite()) {
                return Err(RateError::Invalid(format!(
                    "atom probability {} must be positive",
                    a.prob
                )));
            }
        }
        let total = neumaier(atoms.iter().map(|a| a.prob));
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(RateError::Invalid(format!(
                "atom probabilities sum to {total}, not 1"
            )));
        }
        let mut by_rate: Vec<usize> = (0..atoms.len()).collect();
        by_rate.sort_by(|&i, &j| atoms[i].rate.total_cmp(&atoms[j].rate));
        if by_rate
            .windows(2)
            .any(|w| atoms[w[0]].rate == atoms[w[1]].rate)
        {
            return Err(RateError::Invalid("duplicate atom rates".into()));
        }
        Ok(Self { atoms, by_rate })
    }

    /// Atoms in the order they were given.
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    fn ascending(&self) -> impl DoubleEndedIterator<Item = &Atom> + '_ {
        self.by_rate.iter().map(move |&i| &self.atoms[i])
    }

    /// Index of the atom with exactly this rate.
    pub fn index_of(&self, rate: f64) -> Option<usize> {
        self.atoms.iter().position(|a| a.rate == rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoLaw {
    a: f64,
    b: f64,
}

impl ParetoLaw {
    pub fn new(a: f64, b: f64) -> Result<Self, RateError> {
        if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
            return Err(RateError::Invalid(format!(
                "Pareto needs a > 0 and b > 0, got a = {a}, b = {b}"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `∫ w^k e^{-wt} λ(dw) = b a^k (at)^{b-k} Γ(k - b, at)`.
    fn laplace_moment(&self, t: f64, k: u32) -> Result<f64, RateError> {
        let (a, b) = (self.a, self.b);
        let kf = k as f64;
        let at_zero = || {
            if kf < b {
                b * a.powi(k as i32) / (b - kf)
            } else {
                f64::INFINITY
            }
        };
        if t == 0.0 {
            return Ok(at_zero());
        }
        let p = a * t;
        // p^{b-k} Γ(k-b, p) → 1/(b-k) long before p^{b-k} underflows
        if kf < b && (b - kf) * p.ln() < -600.0 {
            return Ok(at_zero());
        }
        let g = specfun::upper_gamma(kf - b, p)?;
        Ok(b * a.powi(k as i32) * p.powf(b - kf) * g)
    }

    /// `λ([0, w(x)]) = 1 - x` solved as `w(x) = a x^{-1/b}`.
    fn quantile(&self, x: f64) -> f64 {
        self.a * x.powf(-1.0 / self.b)
    }

    /// Mass-weighted rates over the lowest `1 - x` of the law:
    /// `∫_a^{w(x)} w λ(dw) = ab/(1-b) (x^{1-1/b} - 1)`, `a ln(1/x)` at `b = 1`.
    pub fn lower_first_moment(&self, x: f64) -> f64 {
        let (a, b) = (self.a, self.b);
        if x >= 1.0 {
            return 0.0;
        }
        if x <= 0.0 {
            return if b > 1.0 {
                a * b / (b - 1.0)
            } else {
                f64::INFINITY
            };
        }
        let e = 1.0 - 1.0 / b;
        let lnx = x.ln();
        if (e * lnx).abs() < 1e-9 {
            // expm1 series around b = 1
            let s = e * lnx;
            return a * b * (-lnx) * (1.0 + 0.5 * s + s * s / 6.0) / b;
        }
        a * b / (1.0 - b) * (e * lnx).exp_m1()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalLaw {
    rates: Vec<f64>,
    grouped: DiscreteLaw,
}

impl EmpiricalLaw {
    pub fn new(rates: Vec<f64>) -> Result<Self, RateError> {
        if rates.is_empty() {
            return Err(RateError::Invalid(
                "empirical law needs at least one rate".into(),
            ));
        }
        if let Some(w) = rates.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(RateError::Invalid(format!(
                "empirical rate {w} must be positive and finite"
            )));
        }
        let mut sorted = rates.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut atoms: Vec<Atom> = Vec::new();
        let mut count = 0usize;
        for (i, &w) in sorted.iter().enumerate() {
            count += 1;
            if i + 1 == sorted.len() || sorted[i + 1] != w {
                atoms.push(Atom::new(w, count as f64 / n));
                count = 0;
            }
        }
        // grouped probabilities are k/N; renormalise drift from the divisions
        let total = neumaier(atoms.iter().map(|a| a.prob));
        for a in &mut atoms {
            a.prob /= total;
        }
        let grouped = DiscreteLaw::new(atoms)?;
        Ok(Self { rates, grouped })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Distinct rates with their empirical frequencies, increasing in rate.
    pub fn grouped(&self) -> &DiscreteLaw {
        &self.grouped
    }
}

/// A jump-rate distribution `λ` on `(0, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub enum RateLaw {
    Discrete(DiscreteLaw),
    Pareto(ParetoLaw),
    Empirical(EmpiricalLaw),
}

/// How [`RateLaw::make_empirical`] picks the `n` rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmpiricalMode {
    /// `w_i = w(i / n)` for `i = 1..n`, the upper quantile at evenly spaced levels.
    Quantile,
    /// Independent draws from the law.
    Iid { seed: u64 },
}

impl RateLaw {
    pub fn discrete(atoms: &[(f64, f64)]) -> Result<Self, RateError> {
        DiscreteLaw::new(atoms.iter().map(|&(f, r)| Atom::new(f, r)).collect())
            .map(RateLaw::Discrete)
    }

    /// Point mass `δ_w`.
    pub fn point(w: f64) -> Result<Self, RateError> {
        Self::discrete(&[(w, 1.0)])
    }

    pub fn pareto(a: f64, b: f64) -> Result<Self, RateError> {
        ParetoLaw::new(a, b).map(RateLaw::Pareto)
    }

    pub fn empirical(rates: Vec<f64>) -> Result<Self, RateError> {
        EmpiricalLaw::new(rates).map(RateLaw::Empirical)
    }

    /// The atoms of an atomic law (`None` for Pareto). Empirical laws are
    /// reported grouped by distinct rate.
    pub fn atomic(&self) -> Option<&DiscreteLaw> {
        match self {
            RateLaw::Discrete(d) => Some(d),
            RateLaw::Empirical(e) => Some(e.grouped()),
            RateLaw::Pareto(_) => None,
        }
    }

    pub fn min_rate(&self) -> f64 {
        match self {
            RateLaw::Pareto(p) => p.a,
            _ => self
                .atomic()
                .map(|d| d.ascending().next().map_or(0.0, |a| a.rate))
                .unwrap_or(0.0),
        }
    }

    /// `∫ w^k e^{-wt} λ(dw)` for `k ∈ {0, 1, 2}`; `+∞` when divergent.
    pub fn laplace_moment(&self, t: f64, k: u32) -> Result<f64, RateError> {
        if !(t >= 0.0) {
            return Err(RateError::Domain(format!(
                "laplace_moment needs t >= 0, got {t}"
            )));
        }
        if k > 2 {
            return Err(RateError::Domain(format!(
                "laplace_moment supports k in {{0, 1, 2}}, got {k}"
            )));
        }
        match self {
            RateLaw::Pareto(p) => p.laplace_moment(t, k),
            _ => {
                let d = self.atomic().expect("atomic law");
                let mut acc = Neumaier::default();
                for atom in d.ascending() {
                    acc.add(atom.prob * atom.rate.powi(k as i32) * (-atom.rate * t).exp());
                }
                Ok(acc.total())
            }
        }
    }

    /// `∫ w λ(dw)`, possibly `+∞`.
    pub fn mean(&self) -> f64 {
        self.laplace_moment(0.0, 1).unwrap_or(f64::INFINITY)
    }

    pub fn has_finite_mean(&self) -> bool {
        self.mean().is_finite()
    }

    /// `λ((w, ∞))`.
    pub fn survival(&self, w: f64) -> f64 {
        match self {
            RateLaw::Pareto(p) => {
                if w < p.a {
                    1.0
                } else {
                    (p.a / w).powf(p.b)
                }
            }
            _ => {
                let d = self.atomic().expect("atomic law");
                neumaier(
                    d.ascending()
                        .rev()
                        .take_while(|a| a.rate > w)
                        .map(|a| a.prob),
                )
            }
        }
    }

    /// Upper quantile `w(x)` with `λ([0, w(x)]) = 1 - x`, `0 < x < 1`.
    ///
    /// Atomic laws use the right-continuous inverse
    /// `w(x) = min { w : λ((w, ∞)) < x }`, so a level that lands exactly on an
    /// atom boundary resolves to the larger rate.
    pub fn quantile_upper(&self, x: f64) -> Result<f64, RateError> {
        if !(x > 0.0 && x < 1.0) {
            return Err(RateError::Domain(format!(
                "quantile level must lie in (0, 1), got {x}"
            )));
        }
        Ok(self.quantile_unchecked(x))
    }

    /// Same as [`quantile_upper`](Self::quantile_upper) but also accepts
    /// `x = 1` (the lower end of the support).
    fn quantile_unchecked(&self, x: f64) -> f64 {
        match self {
            RateLaw::Pareto(p) => p.quantile(x),
            _ => {
                let d = self.atomic().expect("atomic law");
                let mut above = Neumaier::default();
                for atom in d.ascending().rev() {
                    // atoms strictly above this one carry `above`; this one is
                    // the quantile once adding it would reach x
                    let next = above.total() + atom.prob;
                    if next >= x {
                        return atom.rate;
                    }
                    above.add(atom.prob);
                }
                d.ascending().next().expect("non-empty").rate
            }
        }
    }

    /// `∫ w 1{w in the lowest (1 - x) of the mass} λ(dw)`.
    ///
    /// For continuous laws this is `∫_0^{w(x)} w λ(dw)`. For atomic laws the
    /// atom straddling the level contributes only its share below it, which
    /// is the `N → ∞` limit of the optimally ordered tail mass.
    pub fn lower_first_moment(&self, x: f64) -> f64 {
        match self {
            RateLaw::Pareto(p) => p.lower_first_moment(x),
            _ => {
                let d = self.atomic().expect("atomic law");
                let mut remaining = (1.0 - x).clamp(0.0, 1.0);
                let mut acc = Neumaier::default();
                for atom in d.ascending() {
                    if remaining <= 0.0 {
                        break;
                    }
                    let take = atom.prob.min(remaining);
                    acc.add(take * atom.rate);
                    remaining -= take;
                }
                acc.total()
            }
        }
    }

    /// `∫ g(w) λ(dw)`: an exact sum for atomic laws, adaptive quadrature in
    /// `v = ln(w/a)` for Pareto, where `λ(dw) = b e^{-bv} dv`.
    pub fn expect<G: FnMut(f64) -> f64>(&self, mut g: G, tol: f64) -> Result<f64, RateError> {
        match self {
            RateLaw::Pareto(p) => {
                let (a, b) = (p.a, p.b);
                let q = specfun::integrate_with(
                    |v| {
                        let weight = b * (-b * v).exp();
                        if weight == 0.0 || !(a * v.exp()).is_finite() {
                            0.0
                        } else {
                            g(a * v.exp()) * weight
                        }
                    },
                    0.0,
                    f64::INFINITY,
                    QuadOptions {
                        abs_tol: tol,
                        ..QuadOptions::default()
                    },
                )?;
                if !q.converged {
                    return Err(RateError::Numeric(SpecFunError::NoConvergence {
                        what: "expectation under the Pareto law",
                        iterations: q.evaluations,
                    }));
                }
                Ok(q.value)
            }
            _ => {
                let d = self.atomic().expect("atomic law");
                let mut acc = Neumaier::default();
                for atom in d.ascending() {
                    acc.add(atom.prob * g(atom.rate));
                }
                Ok(acc.total())
            }
        }
    }

    /// Law of the rate of the jumping item: `w λ(dw) / ∫ w λ`.
    ///
    /// Pareto(a, b) with `b > 1` maps to Pareto(a, b - 1).
    pub fn size_biased(&self) -> Result<RateLaw, RateError> {
        let mean = self.mean();
        if !mean.is_finite() {
            return Err(RateError::DivergentMean);
        }
        match self {
            RateLaw::Pareto(p) => RateLaw::pareto(p.a, p.b - 1.0),
            RateLaw::Discrete(d) => {
                let atoms = d
                    .atoms
                    .iter()
                    .map(|a| Atom::new(a.rate, a.rate * a.prob / mean))
                    .collect();
                Ok(RateLaw::Discrete(renormalised(atoms)?))
            }
            RateLaw::Empirical(e) => {
                let atoms = e
                    .grouped
                    .atoms
                    .iter()
                    .map(|a| Atom::new(a.rate, a.rate * a.prob / mean))
                    .collect();
                Ok(RateLaw::Discrete(renormalised(atoms)?))
            }
        }
    }

    /// An `n`-item rate vector approximating this law.
    pub fn make_empirical(&self, n: usize, mode: EmpiricalMode) -> Result<RateLaw, RateError> {
        Ok(RateLaw::Empirical(EmpiricalLaw::new(
            self.rate_vector(n, mode)?,
        )?))
    }

    /// The raw rate vector behind [`make_empirical`](Self::make_empirical).
    pub fn rate_vector(&self, n: usize, mode: EmpiricalMode) -> Result<Vec<f64>, RateError> {
        if n == 0 {
            return Err(RateError::Domain("need at least one item".into()));
        }
        let rates = match mode {
            EmpiricalMode::Quantile => match self {
                RateLaw::Pareto(p) => {
                    let nf = n as f64;
                    (1..=n)
                        .map(|i| p.a * (nf / i as f64).powf(1.0 / p.b))
                        .collect()
                }
                _ => (1..=n)
                    .map(|i| self.quantile_unchecked(i as f64 / n as f64))
                    .collect(),
            },
            EmpiricalMode::Iid { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                self.sample_n(n, &mut rng)?
            }
        };
        Ok(rates)
    }

    /// `n` independent draws from the law.
    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>, RateError> {
        match self {
            RateLaw::Pareto(p) => Ok((0..n)
                .map(|_| {
                    let u = 1.0 - rng.random::<f64>();
                    p.a * u.powf(-1.0 / p.b)
                })
                .collect()),
            RateLaw::Empirical(e) => Ok((0..n)
                .map(|_| e.rates[rng.random_range(0..e.rates.len())])
                .collect()),
            RateLaw::Discrete(d) => {
                let index = WeightedIndex::new(d.atoms.iter().map(|a| a.prob))
                    .map_err(|e| RateError::Invalid(e.to_string()))?;
                Ok((0..n).map(|_| d.atoms[index.sample(rng)].rate).collect())
            }
        }
    }
}

fn renormalised(mut atoms: Vec<Atom>) -> Result<DiscreteLaw, RateError> {
    let total = neumaier(atoms.iter().map(|a| a.prob));
    for a in &mut atoms {
        a.prob /= total;
    }
    DiscreteLaw::new(atoms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> RateLaw {
        RateLaw::discrete(&[(1.0, 0.5), (2.0, 0.5)]).unwrap()
    }

    #[test]
    fn validation() {
        assert!(RateLaw::discrete(&[(1.0, 0.5), (2.0, 0.4)]).is_err());
        assert!(RateLaw::discrete(&[(0.0, 1.0)]).is_err());
        assert!(RateLaw::discrete(&[(1.0, 0.5), (1.0, 0.5)]).is_err());
        assert!(RateLaw::pareto(0.0, 1.0).is_err());
        assert!(RateLaw::pareto(1.0, -1.0).is_err());
        assert!(RateLaw::empirical(vec![1.0, -2.0]).is_err());
        assert!(RateLaw::empirical(vec![]).is_err());
    }

    #[test]
    fn laplace_examples() {
        let delta = RateLaw::point(1.0).unwrap();
        assert!((delta.laplace_moment(1.0, 0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(delta.laplace_moment(0.0, 1).unwrap(), 1.0);

        let p = RateLaw::pareto(1.0, 2.0).unwrap();
        assert!((p.laplace_moment(0.0, 1).unwrap() - 2.0).abs() < 1e-15);
        let heavy = RateLaw::pareto(1.0, 0.5).unwrap();
        assert_eq!(heavy.laplace_moment(0.0, 1).unwrap(), f64::INFINITY);

        let expected = ((-1.0f64).exp() + (-2.0f64).exp()) / 2.0;
        assert!((two_point().laplace_moment(1.0, 0).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.251_607_4).abs() < 1e-7);
    }

    #[test]
    fn laplace_rejects_bad_arguments() {
        let p = two_point();
        assert!(p.laplace_moment(-1.0, 0).is_err());
        assert!(p.laplace_moment(1.0, 3).is_err());
    }

    #[test]
    fn pareto_laplace_matches_quadrature() {
        for &(a, b) in &[(1.0, 0.5), (1.0, 2.0), (0.5, 1.5), (2.0, 0.81), (1.0, 3.0)] {
            let law = RateLaw::pareto(a, b).unwrap();
            for &t in &[1e-3, 0.1, 1.0, 5.0] {
                for k in 0..=2u32 {
                    let direct = law.laplace_moment(t, k).unwrap();
                    let quad = law
                        .expect(|w| (k as f64 * w.ln() - w * t).exp(), 1e-13)
                        .unwrap();
                    let rel = (direct - quad).abs() / quad.abs();
                    assert!(rel < 1e-9, "a={a} b={b} t={t} k={k}: {direct} vs {quad}");
                }
            }
        }
    }

    #[test]
    fn quantile_examples() {
        let p = RateLaw::pareto(1.0, 1.0).unwrap();
        assert!((p.quantile_upper(0.25).unwrap() - 4.0).abs() < 1e-14);
        let p2 = RateLaw::pareto(2.0, 2.0).unwrap();
        assert!((p2.quantile_upper(1.0 - 1e-12).unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(two_point().quantile_upper(0.25).unwrap(), 2.0);
        assert_eq!(two_point().quantile_upper(0.5).unwrap(), 2.0);
        assert_eq!(two_point().quantile_upper(0.75).unwrap(), 1.0);
        assert!(two_point().quantile_upper(0.0).is_err());
        assert!(two_point().quantile_upper(1.0).is_err());
    }

    #[test]
    fn size_biasing() {
        let sb = two_point().size_biased().unwrap();
        let atoms = sb.atomic().unwrap().atoms();
        assert!((atoms[0].prob - 1.0 / 3.0).abs() < 1e-15);
        assert!((atoms[1].prob - 2.0 / 3.0).abs() < 1e-15);

        let point = RateLaw::point(3.0).unwrap().size_biased().unwrap();
        assert_eq!(point.atomic().unwrap().atoms(), &[Atom::new(3.0, 1.0)]);

        assert_eq!(
            RateLaw::pareto(1.0, 0.5).unwrap().size_biased(),
            Err(RateError::DivergentMean)
        );
        assert_eq!(
            RateLaw::pareto(1.0, 2.5).unwrap().size_biased().unwrap(),
            RateLaw::pareto(1.0, 1.5).unwrap()
        );
    }

    #[test]
    fn quantile_empirical() {
        let p = RateLaw::pareto(1.0, 1.0).unwrap();
        let w = p.rate_vector(4, EmpiricalMode::Quantile).unwrap();
        let expected = [4.0, 2.0, 4.0 / 3.0, 1.0];
        for (x, y) in w.iter().zip(expected) {
            assert!((x - y).abs() < 1e-14);
        }
        let d = RateLaw::point(5.0)
            .unwrap()
            .rate_vector(3, EmpiricalMode::Quantile)
            .unwrap();
        assert_eq!(d, vec![5.0, 5.0, 5.0]);

        let two = two_point()
            .rate_vector(2048, EmpiricalMode::Quantile)
            .unwrap();
        assert_eq!(two.iter().filter(|&&w| w == 2.0).count(), 1024);
    }

    #[test]
    fn iid_empirical_mean_in_clt_band() {
        // Pareto(1, 2) has mean 2 and infinite variance; use the
        // truncated-moment band from a Monte Carlo spread of 50 replicas.
        let law = RateLaw::pareto(1.0, 2.0).unwrap();
        let n = 100_000;
        let w = law.rate_vector(n, EmpiricalMode::Iid { seed: 7 }).unwrap();
        let mean = w.iter().sum::<f64>() / n as f64;
        let replica_means: Vec<f64> = (0..50u64)
            .map(|s| {
                let v = law
                    .rate_vector(n, EmpiricalMode::Iid { seed: 1000 + s })
                    .unwrap();
                v.iter().sum::<f64>() / n as f64
            })
            .collect();
        let m = replica_means.iter().sum::<f64>() / 50.0;
        let sd = (replica_means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 49.0).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * sd, "mean {mean}, sd {sd}");
        // reproducible from the seed
        assert_eq!(
            w,
            law.rate_vector(n, EmpiricalMode::Iid { seed: 7 }).unwrap()
        );
    }

    #[test]
    fn lower_first_moment_pareto_matches_quadrature() {
        for &b in &[0.5, 1.0, 2.0] {
            let law = RateLaw::pareto(1.0, b).unwrap();
            for &x in &[0.9, 0.5, 0.1, 1e-3] {
                let w = law.quantile_upper(x).unwrap();
                let q = specfun::integrate(|v| v * b * v.powf(-b - 1.0), 1.0, w, 1e-12).unwrap();
                let closed = law.lower_first_moment(x);
                assert!((closed - q.value).abs() / q.value < 1e-9, "b={b} x={x}");
            }
        }
    }

    #[test]
    fn lower_first_moment_atomic_splits_atoms() {
        // lowest 75% of the mass: all of rate 1 and half of rate 2
        assert!((two_point().lower_first_moment(0.25) - 1.0).abs() < 1e-15);
        assert!((two_point().lower_first_moment(0.0) - 1.5).abs() < 1e-15);
    }
}
