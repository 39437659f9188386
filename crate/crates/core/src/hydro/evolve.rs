use super::profile::{y_hat_clamped, InitialProfile};
use super::{HydroError, LimitModel};
use crate::rates::Atom;

/// `|y - y_C(t)|` below this is treated as lying on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `y < y_C(t)`: every item here has jumped at least once.
    Renewed,
    /// `y > y_C(t)`: the never-jumped items, still in initial order.
    Initial,
    /// Within [`BOUNDARY_TOL`] of `y_C(t)`; both one-sided values are kept.
    Boundary,
}

/// Limiting tail masses `U_α(y, t) = μ_t({f_α} × (y, 1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolvedTail {
    pub y: f64,
    pub t: f64,
    pub regime: Regime,
    /// Rates `f_α`, in the order of the law's atoms.
    pub rates: Vec<f64>,
    /// `U_α(y, t)`; on the boundary this is the renewed-side limit.
    pub masses: Vec<f64>,
    /// The initial-side limit when `regime` is `Boundary`.
    pub other_side: Option<Vec<f64>>,
}

impl EvolvedTail {
    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }
}

/// Closed-form solution for one (law, profile) pair, checked once and
/// evaluated many times.
#[derive(Debug, Clone)]
pub struct TailSolution<'a> {
    model: &'a LimitModel,
    profile: &'a InitialProfile,
    atoms: Vec<Atom>,
    /// `block_probs[k][α]`: weight of atom `α` in block `k`.
    block_probs: Vec<Vec<f64>>,
}

impl<'a> TailSolution<'a> {
    pub fn new(model: &'a LimitModel, profile: &'a InitialProfile) -> Result<Self, HydroError> {
        let law = model.law().atomic().ok_or(HydroError::NotAtomic)?;
        profile.check_marginal(model.law())?;
        let atoms = law.atoms().to_vec();
        let block_probs = profile
            .blocks()
            .iter()
            .map(|b| {
                atoms
                    .iter()
                    .map(|a| {
                        b.mix
                            .index_of(a.rate)
                            .map_or(0.0, |i| b.mix.atoms()[i].prob)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            model,
            profile,
            atoms,
            block_probs,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn model(&self) -> &LimitModel {
        self.model
    }

    pub fn profile(&self) -> &InitialProfile {
        self.profile
    }

    fn check(y: f64, t: f64) -> Result<(), HydroError> {
        if !(0.0..=1.0).contains(&y) {
            return Err(HydroError::Domain(format!(
                "position must lie in [0, 1], got {y}"
            )));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(HydroError::Domain(format!(
                "time must be finite and non-negative, got {t}"
            )));
        }
        Ok(())
    }

    fn renewed(&self, y: f64, out: &mut [f64]) -> Result<(), HydroError> {
        let s = self.model.t0(y)?;
        for (u, a) in out.iter_mut().zip(&self.atoms) {
            *u = a.prob * (-a.rate * s).exp();
        }
        Ok(())
    }

    fn initial(&self, y: f64, t: f64, out: &mut [f64]) {
        let z = y_hat_clamped(self.profile, y, t);
        out.iter_mut().for_each(|u| *u = 0.0);
        for (b, probs) in self.profile.blocks().iter().zip(&self.block_probs) {
            let len = (b.hi - b.lo.max(z)).max(0.0);
            if len > 0.0 {
                for (u, p) in out.iter_mut().zip(probs) {
                    *u += len * p;
                }
            }
        }
        for (u, a) in out.iter_mut().zip(&self.atoms) {
            *u *= (-a.rate * t).exp();
        }
    }

    /// Writes `U_α(y, t)` into `out`, taking the renewed side on the boundary.
    pub fn masses_into(&self, y: f64, t: f64, out: &mut [f64]) -> Result<Regime, HydroError> {
        Self::check(y, t)?;
        if y == 1.0 {
            out.iter_mut().for_each(|u| *u = 0.0);
            return Ok(Regime::Initial);
        }
        let yc = self.model.y_c(t)?;
        let regime = classify(y, yc);
        match regime {
            Regime::Initial => self.initial(y, t, out),
            _ => self.renewed(y, out)?,
        }
        Ok(regime)
    }

    /// `U_α(y, t)` with regime classification.
    pub fn at(&self, y: f64, t: f64) -> Result<EvolvedTail, HydroError> {
        let mut masses = vec![0.0; self.atoms.len()];
        let regime = self.masses_into(y, t, &mut masses)?;
        let other_side = if regime == Regime::Boundary {
            let mut other = vec![0.0; self.atoms.len()];
            self.initial(y, t, &mut other);
            Some(other)
        } else {
            None
        };
        Ok(EvolvedTail {
            y,
            t,
            regime,
            rates: self.atoms.iter().map(|a| a.rate).collect(),
            masses,
            other_side,
        })
    }

    /// `Σ_α f_α U_α(y, t)`, the velocity of the transport term.
    pub fn flux(&self, masses: &[f64]) -> f64 {
        masses
            .iter()
            .zip(&self.atoms)
            .map(|(u, a)| a.rate * u)
            .sum()
    }
}

fn classify(y: f64, yc: f64) -> Regime {
    if (y - yc).abs() <= BOUNDARY_TOL {
        Regime::Boundary
    } else if y < yc {
        Regime::Renewed
    } else {
        Regime::Initial
    }
}

/// Limiting tail masses at `(y, t)` for an atomic law.
pub fn evolved_tail(
    model: &LimitModel,
    profile: &InitialProfile,
    y: f64,
    t: f64,
) -> Result<EvolvedTail, HydroError> {
    TailSolution::new(model, profile)?.at(y, t)
}

/// `Σ_α |U_α(0, t) - ρ_α|`, the defect in the top boundary condition.
pub fn boundary_defect(
    model: &LimitModel,
    profile: &InitialProfile,
    t: f64,
) -> Result<f64, HydroError> {
    let sol = TailSolution::new(model, profile)?;
    let tail = sol.at(0.0, t)?;
    Ok(tail
        .masses
        .iter()
        .zip(sol.atoms())
        .map(|(u, a)| (u - a.prob).abs())
        .sum())
}
