//! Numerical kernels used by the limit formulas.
//!
//! * [`upper_gamma`]: upper incomplete gamma `Γ(z, p) = ∫_p^∞ e^{-w} w^{z-1} dw`
//!   for any real `z`, including negative values.
//! * [`find_root`]: bracketed Brent iteration for monotone inversions.
//! * [`integrate`]: adaptive Gauss-Kronrod quadrature on finite and
//!   semi-infinite intervals.
//!
//! All functions are pure and may be called concurrently.

mod gamma;
mod quad;
mod root;

pub use gamma::{gamma, ln_gamma, upper_gamma, upper_gamma_eval, GammaEval, EULER_GAMMA};
pub use quad::{integrate, integrate_with, QuadOptions, Quadrature, DEFAULT_QUAD_TOL};
pub use root::{expand_bracket_up, find_root, find_root_with, RootOptions};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecFunError {
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("root not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    NotBracketed {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("bracket expansion exceeded cap {cap}")]
    BracketCap { cap: f64 },
    #[error("non-finite function value {value} at {at}")]
    NonFinite { at: f64, value: f64 },
    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },
}
