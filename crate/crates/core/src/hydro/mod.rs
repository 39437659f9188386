//! Hydrodynamic limit of the ranking process.
//!
//! As `N → ∞` the fraction of items that have jumped at least once by time
//! `t` converges to the deterministic boundary
//!
//! ```text
//! y_C(t) = 1 - ∫ e^{-wt} λ(dw)
//! ```
//!
//! Items above `y_C(t)` are ordered by their last jump time; below it sit
//! the never-jumped items in their initial relative order. [`LimitModel`]
//! evaluates the boundary and its inverse `t_0`; [`InitialProfile`]
//! describes the initial placement; [`evolved_tail`] gives the limiting
//! per-rate tail masses `U_α(y, t)`, and [`pde_residual`] checks them
//! against the first-order system they solve.

mod evolve;
mod model;
mod pde;
mod profile;

pub use evolve::{boundary_defect, evolved_tail, EvolvedTail, Regime, TailSolution, BOUNDARY_TOL};
pub use model::LimitModel;
pub use pde::{pde_residual, pde_residual_with_margin, GridSpec, PdeResidual};
pub use profile::{y_c_from, y_hat, Block, InitialProfile};

use thiserror::Error;

use crate::rates::RateError;
use crate::specfun::SpecFunError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HydroError {
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("t_0({y}) exceeds the bracket cap t = {cap:e}")]
    Saturated { y: f64, cap: f64 },
    #[error("the per-rate tail masses need an atomic jump-rate law")]
    NotAtomic,
    #[error("invalid initial profile: {0}")]
    Profile(String),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Numeric(#[from] SpecFunError),
}
