//! Limit laws of the search cost.
//!
//! The search cost `C_N` of a request is the position of the requested item
//! just before it moves to the top. In the `N → ∞` limit `C_N / N` has an
//! explicit law in terms of `λ` and the boundary inverse `t_0`. This module
//! evaluates that law and its relatives: the optimal (rate-sorted) ordering,
//! their ratio, the transient law from a given initial profile, and the
//! cache-miss probability of an LRU cache.
//!
//! Quantities that need `∫ w λ(dw) < ∞` return [`SearchCostError::Divergent`]
//! when the mean is infinite.

use thiserror::Error;

use crate::hydro::{HydroError, InitialProfile, LimitModel, TailSolution};
use crate::rates::{RateError, RateLaw};
use crate::specfun::{self, QuadOptions, SpecFunError};
use crate::sum::Neumaier;

/// Absolute tolerance of the quadratures behind this module.
pub const COST_QUAD_TOL: f64 = 1e-11;

/// Atomic laws with more atoms than this integrate over time first.
const NESTED_ATOM_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchCostError {
    #[error("{0} diverges: the jump-rate law has an infinite mean")]
    Divergent(&'static str),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("quadrature for {0} did not reach tolerance")]
    NoConvergence(&'static str),
    #[error(transparent)]
    Hydro(#[from] HydroError),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Numeric(#[from] SpecFunError),
}

type Result<T> = std::result::Result<T, SearchCostError>;

/// Search-cost engine bound to one law.
#[derive(Debug, Clone)]
pub struct CostModel {
    model: LimitModel,
    mean_rate: f64,
}

/// Least-squares fit of `log(1 - M)` against `log R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitRatioFit {
    pub slope: f64,
    /// `b - 1`, the small-`R` exponent.
    pub expected: f64,
    /// Estimated slope bias from the first correction term at the largest `R`.
    pub bias_estimate: f64,
    /// False when `bias_estimate` exceeds [`HIT_RATIO_BIAS_LIMIT`].
    pub in_window: bool,
}

/// Largest tolerated slope bias for a grid to count as asymptotic.
pub const HIT_RATIO_BIAS_LIMIT: f64 = 0.025;

fn quad<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, what: &'static str) -> Result<f64> {
    let q = specfun::integrate_with(
        f,
        a,
        b,
        QuadOptions {
            abs_tol: COST_QUAD_TOL,
            ..QuadOptions::default()
        },
    )?;
    if !q.converged {
        return Err(SearchCostError::NoConvergence(what));
    }
    Ok(q.value)
}

fn check_fraction(x: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(SearchCostError::Domain(format!(
            "{what} must lie in [0, 1], got {x}"
        )));
    }
    Ok(())
}

impl CostModel {
    pub fn new(law: RateLaw) -> Self {
        let mean_rate = law.mean();
        Self {
            model: LimitModel::new(law),
            mean_rate,
        }
    }

    pub fn from_model(model: LimitModel) -> Self {
        let mean_rate = model.law().mean();
        Self { model, mean_rate }
    }

    pub fn model(&self) -> &LimitModel {
        &self.model
    }

    pub fn law(&self) -> &RateLaw {
        self.model.law()
    }

    /// `∫ w λ(dw)`, possibly `+∞`.
    pub fn mean_rate(&self) -> f64 {
        self.mean_rate
    }

    fn finite_mean(&self, what: &'static str) -> Result<f64> {
        if self.mean_rate.is_finite() {
            Ok(self.mean_rate)
        } else {
            Err(SearchCostError::Divergent(what))
        }
    }

    /// `lim P(C_N / N > x) = ∫ e^{-w t_0(x)} w λ(dw) / ∫ w λ(dw)`.
    pub fn stationary_tail(&self, x: f64) -> Result<f64> {
        let m = self.finite_mean("the stationary search-cost tail")?;
        check_fraction(x, "x")?;
        if x == 0.0 {
            return Ok(1.0);
        }
        if x == 1.0 {
            return Ok(0.0);
        }
        let t = self.model.t0(x)?;
        Ok(self.law().laplace_moment(t, 1)? / m)
    }

    /// `lim E[φ(C_N / N)] = (1/m) ∫∫ φ(y_C(t)) e^{-wt} w² λ(dw) dt`,
    /// integrating over time for each rate and then over `λ`.
    pub fn stationary_expectation<F: Fn(f64) -> f64>(&self, phi: F) -> Result<f64> {
        let m = self.finite_mean("the stationary search-cost expectation")?;
        let what = "the stationary search-cost expectation";
        // ∫_0^∞ φ(y_C(s/w)) e^{-s} ds, the time integral after s = wt
        let inner = |w: f64| -> Result<f64> {
            let mut err = None;
            let v = quad(
                |s| match self.model.y_c(s / w) {
                    Ok(y) => phi(y) * (-s).exp(),
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                },
                0.0,
                f64::INFINITY,
                what,
            )?;
            match err {
                Some(e) => Err(e.into()),
                None => Ok(v),
            }
        };
        match self.law() {
            RateLaw::Pareto(_) => {
                let mut err = None;
                let v = self.law().expect(
                    |w| match inner(w) {
                        Ok(i) => w * i,
                        Err(e) => {
                            err.get_or_insert(e);
                            0.0
                        }
                    },
                    COST_QUAD_TOL,
                )?;
                match err {
                    Some(e) => Err(e),
                    None => Ok(v / m),
                }
            }
            law => {
                let d = law.atomic().expect("atomic law");
                if d.atoms().len() > NESTED_ATOM_LIMIT {
                    let mut err = None;
                    let v = quad(
                        |t| match (self.model.y_c(t), law.laplace_moment(t, 2)) {
                            (Ok(y), Ok(l2)) => phi(y) * l2,
                            (Err(e), _) => {
                                err.get_or_insert(SearchCostError::from(e));
                                0.0
                            }
                            (_, Err(e)) => {
                                err.get_or_insert(SearchCostError::from(e));
                                0.0
                            }
                        },
                        0.0,
                        f64::INFINITY,
                        what,
                    )?;
                    return match err {
                        Some(e) => Err(e),
                        None => Ok(v / m),
                    };
                }
                let mut acc = Neumaier::default();
                for a in d.atoms() {
                    acc.add(a.prob * a.rate * inner(a.rate)?);
                }
                Ok(acc.total() / m)
            }
        }
    }

    /// Pareto only: `(b - 1) ∫_0^∞ s^{b-2} Γ(2 - b, s) φ(y_C(s/a)) ds`,
    /// computed with `s = u^{1/(b-1)}` to remove the singularity at 0.
    pub fn stationary_expectation_gamma_form<F: Fn(f64) -> f64>(&self, phi: F) -> Result<f64> {
        let RateLaw::Pareto(p) = self.law() else {
            return Err(SearchCostError::Domain(
                "the incomplete-gamma form needs a Pareto law".into(),
            ));
        };
        self.finite_mean("the stationary search-cost expectation")?;
        let (a, b) = (p.a(), p.b());
        let mut err: Option<SearchCostError> = None;
        let v = quad(
            |u| {
                let s = u.powf(1.0 / (b - 1.0));
                if !s.is_finite() {
                    return 0.0;
                }
                let g = match specfun::upper_gamma(2.0 - b, s) {
                    Ok(g) => g,
                    Err(e) => {
                        err.get_or_insert(e.into());
                        return 0.0;
                    }
                };
                if g == 0.0 {
                    return 0.0;
                }
                match self.model.y_c(s / a) {
                    Ok(y) => g * phi(y),
                    Err(e) => {
                        err.get_or_insert(e.into());
                        0.0
                    }
                }
            },
            0.0,
            f64::INFINITY,
            "the incomplete-gamma form of the expectation",
        )?;
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    /// `lim E[C_N / N] = (1/m) ∫∫ w w̃ / (w + w̃) λ(dw) λ(dw̃)`.
    pub fn mean_search_cost(&self) -> Result<f64> {
        let m = self.finite_mean("the mean search cost")?;
        match self.law() {
            RateLaw::Pareto(_) => {
                let mut err = None;
                let v = self.law().expect(
                    |w| match self.conditional_mean_given_rate(w) {
                        Ok(c) => w * c,
                        Err(e) => {
                            err.get_or_insert(e);
                            0.0
                        }
                    },
                    COST_QUAD_TOL,
                )?;
                match err {
                    Some(e) => Err(e),
                    None => Ok(v / m),
                }
            }
            law => {
                let atoms = law.atomic().expect("atomic law").atoms();
                let mut acc = Neumaier::default();
                for a in atoms {
                    for c in atoms {
                        acc.add(a.prob * c.prob * a.rate * c.rate / (a.rate + c.rate));
                    }
                }
                Ok(acc.total() / m)
            }
        }
    }

    /// `∫ w̃ / (w + w̃) λ(dw̃)`, the limiting `E[C_N / N]` given that the
    /// requested item has rate `w`.
    pub fn conditional_mean_given_rate(&self, w: f64) -> Result<f64> {
        if !(w > 0.0) {
            return Err(SearchCostError::Domain(format!(
                "rate must be positive, got {w}"
            )));
        }
        if w.is_infinite() {
            return Ok(0.0);
        }
        Ok(self.law().expect(|v| v / (w + v), COST_QUAD_TOL)?)
    }

    /// `lim P(R_N / N > x) = ∫_0^{w(x)} w λ(dw) / ∫ w λ(dw)` for the
    /// ordering by decreasing rate.
    pub fn optimal_tail(&self, x: f64) -> Result<f64> {
        let m = self.finite_mean("the optimal-ordering tail")?;
        check_fraction(x, "x")?;
        Ok(self.law().lower_first_moment(x) / m)
    }

    /// `lim E[R_N / N] = (1/2m) ∫∫ min(w, w̃) λ(dw) λ(dw̃)`.
    pub fn optimal_mean(&self) -> Result<f64> {
        let m = self.finite_mean("the optimal-ordering mean")?;
        match self.law() {
            RateLaw::Pareto(p) => {
                let (a, b) = (p.a(), p.b());
                // inner integral split at the kink w̃ = w
                let mut err = None;
                let v = self.law().expect(
                    |w| {
                        let below = quad(
                            |v| v * b * a.powf(b) * v.powf(-b - 1.0),
                            a,
                            w,
                            "the optimal mean",
                        );
                        match below {
                            Ok(lo) => lo + w * self.law().survival(w),
                            Err(e) => {
                                err.get_or_insert(e);
                                0.0
                            }
                        }
                    },
                    COST_QUAD_TOL,
                )?;
                match err {
                    Some(e) => Err(e),
                    None => Ok(v / (2.0 * m)),
                }
            }
            law => {
                let atoms = law.atomic().expect("atomic law").atoms();
                let mut acc = Neumaier::default();
                for a in atoms {
                    for c in atoms {
                        acc.add(a.prob * c.prob * a.rate.min(c.rate));
                    }
                }
                Ok(acc.total() / (2.0 * m))
            }
        }
    }

    /// `∫ e^{-w t_0(x)} w λ(dw) / ∫_0^{w(x)} w λ(dw)`; finite even when the
    /// mean is infinite.
    pub fn cost_ratio(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x < 1.0) {
            return Err(SearchCostError::Domain(format!(
                "cost ratio needs 0 < x < 1, got {x}"
            )));
        }
        let t = self.model.t0(x)?;
        let num = self.law().laplace_moment(t, 1)?;
        Ok(num / self.law().lower_first_moment(x))
    }

    /// Pareto only: `(1 - b)/(a t_0) · (e^{-a t_0} - 1 + x) / (x^{1 - 1/b} - 1)`.
    pub fn cost_ratio_pareto_closed(&self, x: f64) -> Result<f64> {
        let RateLaw::Pareto(p) = self.law() else {
            return Err(SearchCostError::Domain(
                "closed-form ratio needs a Pareto law".into(),
            ));
        };
        if !(x > 0.0 && x < 1.0) {
            return Err(SearchCostError::Domain(format!(
                "cost ratio needs 0 < x < 1, got {x}"
            )));
        }
        let (a, b) = (p.a(), p.b());
        let at = a * self.model.t0(x)?;
        let head = ((-at).exp_m1() + x) / at;
        // (1 - b) / (x^{1-1/b} - 1) = -b e / expm1(e ln x) with e = 1 - 1/b
        let e = 1.0 - 1.0 / b;
        let s = e * x.ln();
        let tail = if s.abs() < 1e-8 {
            -b / (x.ln() * (1.0 + 0.5 * s))
        } else {
            -b * e / s.exp_m1()
        };
        Ok(head * tail)
    }

    /// `lim_{x → 0} cost_ratio(x)`: 1 for a finite mean (and Pareto with
    /// `b >= 1`), `(1 - b) Γ(1 - b)^{1/b}` for Pareto with `b < 1`.
    pub fn ratio_limit_at_zero(&self) -> f64 {
        match self.law() {
            RateLaw::Pareto(p) if p.b() < 1.0 => {
                let b = p.b();
                (1.0 - b) * specfun::gamma(1.0 - b).powf(1.0 / b)
            }
            _ => 1.0,
        }
    }

    /// `lim P(C_N(t) / N > x)` starting from `profile` at time 0.
    ///
    /// Below the boundary `y_C(t)` this is the stationary tail; above it the
    /// never-jumped items contribute `Σ_α f_α U_α(x, t) / m`.
    pub fn transient_tail(&self, profile: &InitialProfile, x: f64, t: f64) -> Result<f64> {
        let m = self.finite_mean("the transient search-cost tail")?;
        check_fraction(x, "x")?;
        let sol = TailSolution::new(&self.model, profile)?;
        self.transient_tail_with(&sol, m, x, t)
    }

    fn transient_tail_with(&self, sol: &TailSolution<'_>, m: f64, x: f64, t: f64) -> Result<f64> {
        let yc = self.model.y_c(t)?;
        if x <= yc {
            return self.stationary_tail(x);
        }
        let tail = sol.at(x, t)?;
        let mut acc = Neumaier::default();
        for (u, f) in tail.masses.iter().zip(&tail.rates) {
            acc.add(f * u);
        }
        Ok(acc.total() / m)
    }

    /// Transient tail on a grid of `x`, checking the profile once.
    pub fn transient_tail_grid(
        &self,
        profile: &InitialProfile,
        xs: &[f64],
        t: f64,
    ) -> Result<Vec<f64>> {
        let m = self.finite_mean("the transient search-cost tail")?;
        let sol = TailSolution::new(&self.model, profile)?;
        xs.iter()
            .map(|&x| {
                check_fraction(x, "x")?;
                self.transient_tail_with(&sol, m, x, t)
            })
            .collect()
    }

    /// `M(t) = ∫ e^{-wt} w λ(dw) / ∫ w λ(dw)`: the probability that a
    /// request at time `t` hits an item that has not been requested yet.
    pub fn miss_probability(&self, t: f64) -> Result<f64> {
        let m = self.finite_mean("the miss probability")?;
        if !(t >= 0.0) {
            return Err(SearchCostError::Domain(format!(
                "time must be non-negative, got {t}"
            )));
        }
        Ok(self.law().laplace_moment(t, 1)? / m)
    }

    /// Pareto only: `M(t) = e^{-at} - (at)^{b-1} Γ(2 - b, at)`.
    pub fn miss_probability_pareto_closed(&self, t: f64) -> Result<f64> {
        let RateLaw::Pareto(p) = self.law() else {
            return Err(SearchCostError::Domain(
                "closed-form miss probability needs a Pareto law".into(),
            ));
        };
        self.finite_mean("the miss probability")?;
        if !(t >= 0.0) {
            return Err(SearchCostError::Domain(format!(
                "time must be non-negative, got {t}"
            )));
        }
        if t == 0.0 {
            return Ok(1.0);
        }
        let at = p.a() * t;
        Ok((-at).exp() - at.powf(p.b() - 1.0) * specfun::upper_gamma(2.0 - p.b(), at)?)
    }

    fn pareto_in_unit_window(&self) -> Result<(f64, f64)> {
        match self.law() {
            RateLaw::Pareto(p) if p.b() > 1.0 && p.b() < 2.0 => Ok((p.a(), p.b())),
            _ => Err(SearchCostError::Domain(
                "needs a Pareto law with 1 < b < 2".into(),
            )),
        }
    }

    /// `|M(t) - (1 - Γ(2 - b)(at)^{b-1})|` for Pareto with `1 < b < 2`.
    pub fn asymptote_error(&self, t: f64) -> Result<f64> {
        let (a, b) = self.pareto_in_unit_window()?;
        let m = self.miss_probability(t)?;
        Ok((m - (1.0 - specfun::gamma(2.0 - b) * (a * t).powf(b - 1.0))).abs())
    }

    /// Fits the exponent of the hit ratio `H(R) = 1 - M(R / m)` over request
    /// counts `R` (Pareto with `1 < b < 2`).
    ///
    /// `1 - M(t) = Γ(2-b) p^{b-1} (1 - c p^{2-b} + …)` with `p = at` and
    /// `c = (1/(2-b) - 1)/Γ(2-b)`; the grid counts as asymptotic when the
    /// slope bias `(2-b) r/(1-r)`, `r = c p_max^{2-b}`, stays under
    /// [`HIT_RATIO_BIAS_LIMIT`].
    pub fn hit_ratio_exponent(&self, r_grid: &[f64]) -> Result<HitRatioFit> {
        let (a, b) = self.pareto_in_unit_window()?;
        if r_grid.len() < 2 || r_grid.iter().any(|r| !(*r > 0.0)) {
            return Err(SearchCostError::Domain(
                "need at least two positive request counts".into(),
            ));
        }
        let m = self.mean_rate;
        let mut pts = Vec::with_capacity(r_grid.len());
        for &r in r_grid {
            let t = r / m;
            let miss = self.miss_probability_pareto_closed(t)?;
            pts.push((r.ln(), (1.0 - miss).ln()));
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;

        let r_max = r_grid.iter().copied().fold(0.0, f64::max);
        let p_max = a * r_max / m;
        let c = (1.0 / (2.0 - b) - 1.0) / specfun::gamma(2.0 - b);
        let r = c * p_max.powf(2.0 - b);
        let bias_estimate = if r < 1.0 {
            (2.0 - b) * r / (1.0 - r)
        } else {
            f64::INFINITY
        };
        Ok(HitRatioFit {
            slope,
            expected: b - 1.0,
            bias_estimate,
            in_window: bias_estimate <= HIT_RATIO_BIAS_LIMIT,
        })
    }
}
