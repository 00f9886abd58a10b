//! State-price-density factors and the mortality law.
//!
//! The state price density factors as `φ(t) = β(t)·φ^Z(t)·φ^N(t)`: riskless
//! discounting, the Brownian stochastic exponential with market price of risk
//! ξ, and the jump factor that changes the death intensity from λ to ψ.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{exp, ln};
use crate::step::StepFunction;

/// Death time τ of the householder; `tau = ∞` when no death occurs by the
/// horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MortalityDraw {
    pub tau: f64,
    pub survived: bool,
}

impl MortalityDraw {
    pub fn new(tau: f64, horizon: f64) -> Self {
        debug_assert!(tau > 0.0);
        Self {
            tau,
            survived: tau > horizon,
        }
    }

    pub fn never() -> Self {
        Self {
            tau: f64::INFINITY,
            survived: true,
        }
    }

    /// `N(t) = 0`, i.e. `t < τ`.
    pub fn alive_at(&self, t: f64) -> bool {
        t < self.tau
    }
}

/// `P(τ > t) = exp(-∫_0^t λ)`.
pub fn survival_probability(t: f64, lambda: &StepFunction) -> f64 {
    exp(-lambda.integral(0.0, t))
}

/// Inverse-transform draw of τ from a uniform in (0, 1): the first time the
/// cumulative hazard reaches `-ln(u)`. Searches only `[0, horizon]`.
pub fn sample_tau(lambda: &StepFunction, horizon: f64, uniform: f64) -> MortalityDraw {
    debug_assert!(uniform > 0.0 && uniform < 1.0);
    match lambda.first_passage(0.0, horizon, -ln(uniform)) {
        Some(tau) if tau > 0.0 => MortalityDraw::new(tau, horizon),
        _ => MortalityDraw::never(),
    }
}

/// Next arrival after `from` of a Poisson process with intensity λ, given a
/// uniform draw; `None` when it falls after `until`.
pub fn next_arrival(lambda: &StepFunction, from: f64, until: f64, uniform: f64) -> Option<f64> {
    lambda
        .first_passage(from, until, -ln(uniform))
        .filter(|&s| s > from)
}

/// `β(t) = exp(-r t)`.
pub fn beta(t: f64, r: f64) -> f64 {
    exp(-r * t)
}

/// One step of the Brownian density factor: `exp(-ξ ΔZ - ξ² Δt / 2)`.
#[inline]
pub fn phi_z_step(dz: f64, xi: f64, dt: f64) -> f64 {
    exp(-xi * dz - 0.5 * xi * xi * dt)
}

/// `φ^Z` at every node of a path given its Brownian increments; the first
/// entry is 1.
pub fn phi_z(dz: &[f64], xi: f64, dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(dz.len() + 1);
    let mut acc = 1.0;
    out.push(acc);
    for &d in dz {
        acc *= phi_z_step(d, xi, dt);
        out.push(acc);
    }
    out
}

/// Jump density factor
/// `(ψ(τ)/λ(τ)·1{τ≤t} + 1{τ>t})·exp(∫_0^{t∧τ} (λ - ψ))`.
pub fn phi_n(t: f64, draw: &MortalityDraw, psi: &StepFunction, lambda: &StepFunction) -> Result<f64> {
    let upto = t.min(draw.tau);
    let exponent = lambda.integral(0.0, upto) - psi.integral(0.0, upto);
    let jump = if draw.tau <= t {
        let l = lambda.value_at(draw.tau);
        if l <= 0.0 {
            return Err(Error::ZeroIntensityAtDeath { tau: draw.tau });
        }
        psi.value_at(draw.tau) / l
    } else {
        1.0
    };
    Ok(jump * exp(exponent))
}

/// Compensated mortality martingale `1{τ≤t} - ∫_0^{t∧τ} λ`.
pub fn compensated_mortality(t: f64, draw: &MortalityDraw, lambda: &StepFunction) -> f64 {
    let jumped = if draw.tau <= t { 1.0 } else { 0.0 };
    jumped - lambda.integral(0.0, t.min(draw.tau))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityFactors {
    pub beta: f64,
    pub phi_z: f64,
    pub phi_n: f64,
    pub phi: f64,
}

impl DensityFactors {
    pub fn new(beta: f64, phi_z: f64, phi_n: f64) -> Self {
        Self {
            beta,
            phi_z,
            phi_n,
            phi: beta * phi_z * phi_n,
        }
    }
}
