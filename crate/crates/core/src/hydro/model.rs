use std::sync::OnceLock;

use super::HydroError;
use crate::rates::RateLaw;
use crate::specfun::{self, RootOptions};

/// Analytic engine bound to one jump-rate law.
#[derive(Debug)]
pub struct LimitModel {
    law: RateLaw,
    t_cap: f64,
    /// `(t, 1 - y_C(t))` at `t = 0, 1, 2, 4, …` up to the cap, built on first use.
    brackets: OnceLock<Vec<(f64, f64)>>,
}

impl Clone for LimitModel {
    fn clone(&self) -> Self {
        Self::new(self.law.clone())
    }
}

impl LimitModel {
    pub fn new(law: RateLaw) -> Self {
        let t_cap = 1e6 / law.min_rate();
        Self {
            law,
            t_cap,
            brackets: OnceLock::new(),
        }
    }

    pub fn law(&self) -> &RateLaw {
        &self.law
    }

    /// Largest time `t_0` will search before reporting saturation.
    pub fn t_cap(&self) -> f64 {
        self.t_cap
    }

    /// `y_C(t) = 1 - ∫ e^{-wt} λ(dw)`.
    pub fn y_c(&self, t: f64) -> Result<f64, HydroError> {
        Ok(1.0 - self.relaxation(t)?)
    }

    /// `1 - y_C(t)`, the mass of items that have not jumped by time `t`.
    pub fn relaxation(&self, t: f64) -> Result<f64, HydroError> {
        if !(t >= 0.0) {
            return Err(HydroError::Domain(format!(
                "time must be non-negative, got {t}"
            )));
        }
        Ok(self.law.laplace_moment(t, 0)?)
    }

    /// `dy_C/dt = ∫ w e^{-wt} λ(dw)`; `+∞` at `t = 0` for infinite-mean laws.
    pub fn dy_c_dt(&self, t: f64) -> Result<f64, HydroError> {
        if !(t >= 0.0) {
            return Err(HydroError::Domain(format!(
                "time must be non-negative, got {t}"
            )));
        }
        Ok(self.law.laplace_moment(t, 1)?)
    }

    /// The Pareto boundary written out as `1 - b (at)^b Γ(-b, at)`.
    ///
    /// Returns `None` for other laws.
    pub fn y_c_pareto_closed_form(&self, t: f64) -> Option<Result<f64, HydroError>> {
        let RateLaw::Pareto(p) = &self.law else {
            return None;
        };
        let (a, b) = (p.a(), p.b());
        Some((|| {
            if !(t >= 0.0) {
                return Err(HydroError::Domain(format!(
                    "time must be non-negative, got {t}"
                )));
            }
            if t == 0.0 {
                return Ok(0.0);
            }
            let at = a * t;
            let g = specfun::upper_gamma(-b, at)?;
            Ok(1.0 - b * at.powf(b) * g)
        })())
    }

    fn bracket_table(&self) -> Result<&Vec<(f64, f64)>, HydroError> {
        if let Some(table) = self.brackets.get() {
            return Ok(table);
        }
        let mut table = vec![(0.0, 1.0)];
        let mut t = 1.0;
        loop {
            let rest = self.relaxation(t)?;
            table.push((t, rest));
            if rest == 0.0 || t >= self.t_cap {
                break;
            }
            t = (2.0 * t).min(self.t_cap);
        }
        Ok(self.brackets.get_or_init(|| table))
    }

    /// Inverse boundary: the `t` with `y_C(t) = y`, for `0 <= y < 1`.
    pub fn t0(&self, y: f64) -> Result<f64, HydroError> {
        if !(0.0..1.0).contains(&y) {
            return Err(HydroError::Domain(format!(
                "t_0 is defined on [0, 1), got {y}"
            )));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        let target = 1.0 - y;
        let table = self.bracket_table()?;
        // first tabulated time whose remaining mass is at or below 1 - y
        let j = table.partition_point(|&(_, rest)| rest > target);
        if j == table.len() {
            return Err(HydroError::Saturated { y, cap: self.t_cap });
        }
        let (lo, hi) = (table[j - 1].0, table[j].0);
        let law = &self.law;
        let root = specfun::find_root_with(
            |t| target - law.laplace_moment(t, 0).unwrap_or(f64::NAN),
            lo,
            hi,
            RootOptions {
                x_tol: 4.0 * f64::EPSILON * hi,
                f_tol: 0.0,
                max_iter: 300,
            },
        )?;
        Ok(root)
    }
}
