//! Martingale-route solution under exponential utility.
//!
//! With `u(x) = -exp(-αx)/α` for both consumption and terminal wealth, the
//! dual problem reduces to deterministic functions of time:
//!
//! ```text
//! g1(t) = ∫_t^T e^{-r(s-t)} ds + e^{-r(T-t)}
//! g2(t) = ∫_t^T (s-t) e^{-r(s-t)} ds + (T-t) e^{-r(T-t)}
//! ln ζ(θ) = -(γ g2(0) + α ∫_0^T e^{-rs}(y(s) - rθ) ds + α W0) / g1(0)
//! J(ζ(θ), v*) = -(ζ(θ)/α) g1(0)
//! ```
//!
//! J is decreasing in θ whenever r > 0, so the optimal premium is θ̂ = 0.
//! The pricing intensity minimising the dual is ψ_v* = 0, under which the
//! state price density before death is `β(t)·φ^Z(t)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimate::EstimatorResult;
use crate::math::{exp, expm1, ln};
use crate::params::ModelParams;
use crate::quadrature::simpson_split;
use crate::step::StepFunction;

/// Default number of Simpson intervals on `[0, T]`.
pub const DEFAULT_INTERVALS: usize = 10_000;

/// Default upper end of the premium range checked by [`solve`].
pub const DEFAULT_THETA_MAX: f64 = 2.0;

/// `∫_0^τ e^{-rs} ds`, exact for every r including 0.
pub fn annuity(r: f64, tau: f64) -> f64 {
    if r == 0.0 {
        tau
    } else {
        -expm1(-r * tau) / r
    }
}

/// `∫_0^τ s e^{-rs} ds`, using the Taylor series where the closed form
/// would cancel.
pub fn annuity_moment(r: f64, tau: f64) -> f64 {
    let x = r * tau;
    if x.abs() < 1e-2 {
        // Σ (-x)^k τ² / (k! (k+2))
        let mut term = 1.0;
        let mut acc = 0.0;
        for k in 0..12 {
            acc += term / (k as f64 + 2.0);
            term *= -x / (k as f64 + 1.0);
        }
        acc * tau * tau
    } else {
        (1.0 - exp(-x) * (1.0 + x)) / (r * r)
    }
}

pub fn g1(t: f64, params: &ModelParams) -> f64 {
    let tau = params.horizon - t;
    annuity(params.r, tau) + exp(-params.r * tau)
}

pub fn g2(t: f64, params: &ModelParams) -> f64 {
    let tau = params.horizon - t;
    annuity_moment(params.r, tau) + tau * exp(-params.r * tau)
}

/// `∫_from^to e^{-r(s-from)} y(s) ds`, exact per income segment.
pub fn income_present_value(params: &ModelParams, from: f64, to: f64) -> f64 {
    params
        .income
        .pieces(from, to)
        .map(|(lo, hi, y)| y * exp(-params.r * (lo - from)) * annuity(params.r, hi - lo))
        .sum()
}

pub fn ln_zeta_of_theta(theta: f64, params: &ModelParams) -> f64 {
    let d = params.derive();
    let t = params.horizon;
    let income = income_present_value(params, 0.0, t) - params.r * theta * annuity(params.r, t);
    -(d.gamma * g2(0.0, params) + params.alpha * income + params.alpha * params.initial_wealth)
        / g1(0.0, params)
}

/// Optimal Lagrange multiplier for a fixed premium θ.
pub fn zeta_of_theta(theta: f64, params: &ModelParams) -> f64 {
    exp(ln_zeta_of_theta(theta, params))
}

/// `J(ζ(θ), v*) = -(ζ(θ)/α) g1(0)`.
pub fn premium_value(theta: f64, params: &ModelParams) -> f64 {
    -zeta_of_theta(theta, params) / params.alpha * g1(0.0, params)
}

/// Candidate point for the dual objective.
#[derive(Debug, Clone, PartialEq)]
pub struct DualObjectiveInputs {
    /// Pricing-measure death intensity ψ_v, nonnegative.
    pub psi_v: StepFunction,
    pub theta: f64,
    pub zeta: f64,
}

/// Penalty density `(ln(ψ/λ) + (λ-ψ)/ψ)·ψ`, taken as 0 at ψ = 0.
fn penalty(psi: f64, lambda: f64, at: f64) -> Result<f64> {
    if psi == 0.0 {
        return Ok(0.0);
    }
    if lambda <= 0.0 {
        return Err(Error::UndefinedRatio { at });
    }
    Ok(psi * ln(psi / lambda) + lambda - psi)
}

/// Piecewise-constant pieces of (ψ, λ) on `[0, T]` with the cumulative ψ
/// and cumulative discounted penalty at each piece start.
struct PenaltyTable {
    starts: Vec<f64>,
    psi: Vec<f64>,
    density: Vec<f64>,
    psi_cum: Vec<f64>,
    penalty_cum: Vec<f64>,
}

impl PenaltyTable {
    fn build(psi: &StepFunction, lambda: &StepFunction, horizon: f64) -> Result<Self> {
        let mut cuts: Vec<f64> = psi
            .breaks_within(0.0, horizon)
            .chain(lambda.breaks_within(0.0, horizon))
            .collect();
        cuts.push(0.0);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let n = cuts.len();
        let mut t = Self {
            starts: cuts,
            psi: Vec::with_capacity(n),
            density: Vec::with_capacity(n),
            psi_cum: Vec::with_capacity(n),
            penalty_cum: Vec::with_capacity(n),
        };
        let (mut big_psi, mut big_pen) = (0.0, 0.0);
        for i in 0..n {
            let lo = t.starts[i];
            let hi = t.starts.get(i + 1).copied().unwrap_or(horizon);
            let mid = 0.5 * (lo + hi);
            let p = psi.value_at(mid);
            if p < 0.0 {
                let segment = psi.breaks().partition_point(|&b| b <= mid);
                return Err(Error::NegativePsi { segment, value: p });
            }
            let k = penalty(p, lambda.value_at(mid), mid)?;
            t.psi.push(p);
            t.density.push(k);
            t.psi_cum.push(big_psi);
            t.penalty_cum.push(big_pen);
            big_pen += k * exp(-big_psi) * annuity(p, hi - lo);
            big_psi += p * (hi - lo);
        }
        Ok(t)
    }

    /// `(∫_0^s ψ, ∫_0^s K(u) e^{-∫_0^u ψ} du)`.
    fn at(&self, s: f64) -> (f64, f64) {
        let i = self.starts.partition_point(|&c| c <= s).max(1) - 1;
        let dx = s - self.starts[i];
        let p = self.psi[i];
        (
            self.psi_cum[i] + p * dx,
            self.penalty_cum[i] + self.density[i] * exp(-self.psi_cum[i]) * annuity(p, dx),
        )
    }
}

/// Dual objective J(ζ, v) with exact inner integrals and Simpson outer
/// integral on `n_intervals` subintervals aligned to all breakpoints.
pub fn dual_objective(inputs: &DualObjectiveInputs, params: &ModelParams, n_intervals: usize) -> Result<f64> {
    if !(inputs.zeta > 0.0) {
        return Err(Error::NonPositive("zeta"));
    }
    if !(inputs.theta >= 0.0) || !inputs.theta.is_finite() {
        return Err(Error::InvalidPremium(inputs.theta));
    }
    let big_t = params.horizon;
    let table = PenaltyTable::build(&inputs.psi_v, &params.mortality, big_t)?;
    let gamma = params.derive().gamma;
    let ln_zeta = ln(inputs.zeta);
    let (alpha, r, delta, theta) = (params.alpha, params.r, params.delta, inputs.theta);

    let h = |s: f64| {
        let (_, pen) = table.at(s);
        1.0 - ln_zeta - gamma * s - pen
    };

    let mut cuts: Vec<f64> = table.starts.clone();
    cuts.extend(params.income.breaks_within(0.0, big_t));

    let integral = simpson_split(0.0, big_t, n_intervals, &cuts, |s, anchor| {
        let (big_psi, _) = table.at(s);
        let y = params.income.value_at(anchor);
        let psi = inputs.psi_v.value_at(anchor);
        let f = alpha * (y - (r - psi * delta) * theta) * exp(-big_psi);
        exp(-r * s) * (h(s) - f)
    });

    Ok(-(inputs.zeta / alpha) * (integral + exp(-r * big_t) * h(big_t) - alpha * params.initial_wealth))
}

/// Solution of the martingale route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormSolution {
    pub zeta_star: f64,
    pub theta_hat: f64,
    /// J at the optimum.
    pub value: f64,
    r: f64,
    horizon: f64,
}

impl ClosedFormSolution {
    fn tau(&self, t: f64) -> f64 {
        self.horizon - t
    }

    pub fn g1_at(&self, t: f64) -> f64 {
        let tau = self.tau(t);
        annuity(self.r, tau) + exp(-self.r * tau)
    }

    pub fn g2_at(&self, t: f64) -> f64 {
        let tau = self.tau(t);
        annuity_moment(self.r, tau) + tau * exp(-self.r * tau)
    }
}

pub fn solve(params: &ModelParams) -> Result<ClosedFormSolution> {
    solve_with(params, DEFAULT_THETA_MAX, 41)
}

/// Solves with θ̂ = 0 after checking on `checks` evenly spaced premiums in
/// `[0, theta_max]` that J(ζ(θ), v*) decreases (strictly when r > 0).
pub fn solve_with(params: &ModelParams, theta_max: f64, checks: usize) -> Result<ClosedFormSolution> {
    let checks = checks.max(2);
    let mut prev = premium_value(0.0, params);
    for k in 1..checks {
        let theta = theta_max * k as f64 / (checks - 1) as f64;
        let j = premium_value(theta, params);
        let decreasing = if params.r > 0.0 { j < prev } else { j <= prev };
        if !decreasing {
            return Err(Error::PremiumNotDecreasing { theta_max, at: theta });
        }
        prev = j;
    }
    let zeta_star = zeta_of_theta(0.0, params);
    Ok(ClosedFormSolution {
        zeta_star,
        theta_hat: 0.0,
        value: -(zeta_star / params.alpha) * g1(0.0, params),
        r: params.r,
        horizon: params.horizon,
    })
}

/// `φ_v*(t) = β(t) φ^Z(t)` for a householder still alive at t.
pub fn state_price_vstar(t: f64, phi_z: f64, params: &ModelParams) -> f64 {
    exp(-params.r * t) * phi_z
}

/// `ĉ(t) = -(ln(ζ* φ_v*(t)) + ρt)/α`. Only defined while alive: after death
/// φ_v* = 0 and the rule has no finite value.
pub fn optimal_consumption(t: f64, phi_vstar: f64, zeta_star: f64, params: &ModelParams) -> Result<f64> {
    if !(phi_vstar > 0.0) {
        return Err(Error::PostDeathConsumption(phi_vstar));
    }
    Ok(-(ln(zeta_star * phi_vstar) + params.rho * t) / params.alpha)
}

/// Same rule from `ln φ_v*(t)`, for callers that keep the density in logs.
pub fn optimal_consumption_ln(t: f64, ln_phi_vstar: f64, ln_zeta_star: f64, params: &ModelParams) -> f64 {
    -(ln_zeta_star + ln_phi_vstar + params.rho * t) / params.alpha
}

/// Optimal wealth as a function of current optimal consumption:
/// `Ŵ(t) = ĉ(t) g1(t) - (γ/α) g2(t) - ∫_t^T e^{-r(s-t)} y(s) ds`.
pub fn wealth_identity(t: f64, c_hat: f64, params: &ModelParams) -> f64 {
    let gamma = params.derive().gamma;
    c_hat * g1(t, params) - gamma / params.alpha * g2(t, params)
        - income_present_value(params, t, params.horizon)
}

/// `ŵ(t) = (μ - r)/(σ² α) · g1(t)`, wealth held in the risky asset.
pub fn optimal_portfolio(t: f64, params: &ModelParams) -> f64 {
    (params.mu - params.r) / (params.sigma * params.sigma * params.alpha) * g1(t, params)
}

/// Right side of the budget identity: `W0 + ∫_0^T e^{-rt}(y(t) - rθ) dt`.
/// With θ* = 0 the premium adjustment is exactly zero.
pub fn budget_target(params: &ModelParams, theta: f64) -> f64 {
    let premium = if theta == 0.0 {
        0.0
    } else {
        params.r * theta * annuity(params.r, params.horizon)
    };
    params.initial_wealth + income_present_value(params, 0.0, params.horizon) - premium
}

/// Estimates `E^{Q_v*}[∫_0^T β ĉ dt + β(T) Ŵ(T)]`.
pub trait DiscountedSpendingEstimator {
    type Error;

    fn discounted_spending(
        &self,
        solution: &ClosedFormSolution,
        params: &ModelParams,
    ) -> core::result::Result<EstimatorResult, Self::Error>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetReport {
    pub estimate: EstimatorResult,
    pub target: f64,
    pub discrepancy: f64,
    pub pass: bool,
}

/// Checks that the optimal plan exactly exhausts the budget under the v*
/// pricing measure: the estimate must lie within 3 standard errors of
/// [`budget_target`].
pub fn budget_identity_check<E: DiscountedSpendingEstimator>(
    solution: &ClosedFormSolution,
    params: &ModelParams,
    engine: &E,
) -> core::result::Result<BudgetReport, E::Error> {
    let estimate = engine.discounted_spending(solution, params)?;
    let target = budget_target(params, solution.theta_hat);
    Ok(BudgetReport {
        estimate,
        target,
        discrepancy: estimate.mean - target,
        pass: estimate.agrees_with(target, 3.0),
    })
}
