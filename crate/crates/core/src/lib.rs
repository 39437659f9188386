//! Move-to-front ranking driven by independent Poisson clocks.
//!
//! Each of `N` items carries a jump rate; when its clock rings it moves to
//! the top of the list and everything above it shifts down by one. This
//! crate provides two views of that process:
//!
//! * [`sim`]: exact event-driven simulation of the finite list.
//! * [`hydro`] and [`searchcost`]: the `N → ∞` description, where the
//!   normalized position `y = k/N` and the rate profile evolve
//!   deterministically, plus the derived search-cost laws.
//!
//! [`rates`] holds the jump-rate distributions, [`specfun`] the special
//! functions and numerical kernels, and [`cli`] the experiment driver behind
//! the `rankflow` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod hydro;
pub mod rates;
pub mod searchcost;
pub mod sim;
pub mod specfun;

mod sum;
