//! Optimal life insurance, consumption and investment for a wage earner with
//! exponential utility.
//!
//! The crate solves the householder's problem by two independent routes:
//!
//! * [`closedform`]: the martingale (duality) route, giving the multiplier
//!   ζ*, the optimal premium θ̂ = 0, the consumption rule ĉ, the wealth
//!   identity and the deterministic portfolio ŵ.
//! * [`hjb`]: the dynamic-programming route, with value function
//!   `V(t, x) = -exp(-A(t) x - B(t))`, feedback controls and buyer's
//!   indifference prices.
//!
//! [`stateprice`] holds the pathwise state-price-density factors and the
//! mortality law used by Monte Carlo validation. Everything here is pure
//! numerics and builds without `std`; simulation, file formats and the CLI
//! live in the `optinsure` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod closedform;
mod error;
pub mod estimate;
pub mod hjb;
pub(crate) mod math;
pub mod params;
pub mod quadrature;
pub mod stateprice;
pub mod step;

pub use error::{Error, Result};
pub use estimate::{EstimatorResult, NeumaierSum};
pub use params::{DerivedConstants, ModelParams, TimeGrid};
pub use step::StepFunction;
