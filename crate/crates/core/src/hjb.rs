//! Dynamic-programming route.
//!
//! For a fixed premium θ the HJB equation
//!
//! ```text
//! V_t - ρV + max_{c,w} [ ½(wσ)² V_xx + (rx + y - c + w(μ-r) - θr) V_x
//!                        + λ (V(t, x+θδ) - V(t, x)) + u(c) ] = 0,   V(T, x) = u(x)
//! ```
//!
//! has the solution `V(t, x) = -exp(-A(t) x - B(t))` with `A = α/g1` and B
//! solving the linear ODE `B' + P B = Q`, `B(T) = ln α`, where `P = -A/α`.
//! The exact antiderivative `exp(∫_t^s P) = g1(s) e^{-r(s-t)} / g1(t)` turns
//! the variation-of-constants solution into a single integral,
//!
//! ```text
//! B(t) = e^{-r(T-t)} [ ln α - ∫_t^T Q(s) g1(s) e^{r(T-s)} ds ] / g1(t),
//! ```
//!
//! evaluated by composite Simpson on the grid cells (split at λ and y
//! breakpoints).

use alloc::vec::Vec;

use crate::closedform::g1;
use crate::error::{Error, Result};
use crate::math::{exp, ln};
use crate::params::{ModelParams, TimeGrid};
use crate::quadrature::simpson_split;

/// Default number of grid steps on `[0, T]`.
pub const DEFAULT_STEPS: usize = 10_000;

/// `A(t) = α / g1(t)`.
pub fn a_of_t(t: f64, params: &ModelParams) -> f64 {
    params.alpha / g1(t, params)
}

/// `Q^θ(t)` for given income and mortality levels at t.
fn q_theta(t: f64, theta: f64, y: f64, lambda: f64, params: &ModelParams) -> f64 {
    let a = a_of_t(t, params);
    let xi = params.derive().xi;
    a * ((1.0 - ln(a)) / params.alpha - y + theta * params.r) - params.rho - 0.5 * xi * xi
        + lambda * (exp(-a * theta * params.delta) - 1.0)
}

fn check_theta(theta: f64) -> Result<()> {
    if theta >= 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidPremium(theta))
    }
}

fn breakpoints(params: &ModelParams) -> Vec<f64> {
    let mut cuts: Vec<f64> = params
        .income
        .breaks_within(0.0, params.horizon)
        .chain(params.mortality.breaks_within(0.0, params.horizon))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

/// `∫_lo^hi Q(s) g1(s) e^{r(T-s)} ds`.
fn weighted_q_integral(lo: f64, hi: f64, n: usize, theta: f64, cuts: &[f64], params: &ModelParams) -> f64 {
    simpson_split(lo, hi, n, cuts, |s, anchor| {
        let y = params.income.value_at(anchor);
        let l = params.mortality.value_at(anchor);
        q_theta(s, theta, y, l, params) * g1(s, params) * exp(params.r * (params.horizon - s))
    })
}

fn b_from_tail(t: f64, tail: f64, params: &ModelParams) -> f64 {
    exp(-params.r * (params.horizon - t)) * (ln(params.alpha) - tail) / g1(t, params)
}

/// `B^θ(t)` with `n_intervals` Simpson intervals on `[t, T]`.
pub fn b_of_t(t: f64, theta: f64, params: &ModelParams, n_intervals: usize) -> Result<f64> {
    check_theta(theta)?;
    if t >= params.horizon {
        return Ok(ln(params.alpha));
    }
    let cuts = breakpoints(params);
    let tail = weighted_q_integral(t, params.horizon, n_intervals, theta, &cuts, params);
    Ok(b_from_tail(t, tail, params))
}

/// A and B^θ tabulated on a uniform grid over `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSurface {
    pub theta: f64,
    pub grid: TimeGrid,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl ValueSurface {
    pub fn solve(params: &ModelParams, theta: f64, n_steps: usize) -> Result<Self> {
        check_theta(theta)?;
        let grid = TimeGrid::new(0.0, params.horizon, n_steps)?;
        let cuts = breakpoints(params);
        let n = grid.n_steps();

        let mut tails = alloc::vec![0.0; n + 1];
        for i in (0..n).rev() {
            let (lo, hi) = (grid.node(i), grid.node(i + 1));
            let inner: Vec<f64> = cuts.iter().copied().filter(|&c| c > lo && c < hi).collect();
            tails[i] = tails[i + 1] + weighted_q_integral(lo, hi, 2, theta, &inner, params);
        }

        let a = grid.nodes().map(|t| a_of_t(t, params)).collect();
        let b = grid
            .nodes()
            .zip(&tails)
            .map(|(t, &tail)| b_from_tail(t, tail, params))
            .collect();
        Ok(Self { theta, grid, a, b })
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.grid.n_steps();
        let x = ((t - self.grid.t0()) / self.grid.dt()).clamp(0.0, n as f64);
        let i = (libm::floor(x) as usize).min(n - 1);
        (i, x - i as f64)
    }

    fn interpolate(&self, values: &[f64], t: f64) -> f64 {
        let (i, w) = self.locate(t);
        if w == 0.0 {
            values[i]
        } else if w == 1.0 {
            values[i + 1]
        } else {
            values[i] + w * (values[i + 1] - values[i])
        }
    }

    /// A at t, linear between nodes.
    pub fn a_at(&self, t: f64) -> f64 {
        self.interpolate(&self.a, t)
    }

    /// B^θ at t, linear between nodes.
    pub fn b_at(&self, t: f64) -> f64 {
        self.interpolate(&self.b, t)
    }

    /// `V(t, x) = -exp(-A(t) x - B(t))`.
    pub fn value(&self, t: f64, x: f64) -> f64 {
        -exp(-self.a_at(t) * x - self.b_at(t))
    }
}

/// Consumption and portfolio maximising the HJB Hamiltonian.
#[derive(Debug, Clone, Copy)]
pub struct FeedbackControls<'a> {
    surface: &'a ValueSurface,
    alpha: f64,
    merton: f64,
}

impl<'a> FeedbackControls<'a> {
    pub fn new(surface: &'a ValueSurface, params: &ModelParams) -> Self {
        Self {
            surface,
            alpha: params.alpha,
            merton: (params.mu - params.r) / (params.sigma * params.sigma),
        }
    }

    pub fn surface(&self) -> &'a ValueSurface {
        self.surface
    }

    pub fn theta(&self) -> f64 {
        self.surface.theta
    }

    /// `c(t, x) = (A x + B - ln A)/α`, from `u'(c) = V_x`.
    pub fn consumption(&self, t: f64, x: f64) -> f64 {
        let a = self.surface.a_at(t);
        (a * x + self.surface.b_at(t) - ln(a)) / self.alpha
    }

    /// `w(t) = (μ - r)/(σ² A(t))`, from `w = -(μ-r) V_x / (σ² V_xx)`.
    pub fn portfolio(&self, t: f64) -> f64 {
        self.merton / self.surface.a_at(t)
    }
}

/// Buyer's indifference price: the h with `V^0(t, x) = V^θ(t, x - h)`,
/// which is `(B^θ(t) - B^0(t)) / A(t)` for every x.
pub fn indifference_price(t: f64, with_premium: &ValueSurface, without: &ValueSurface) -> f64 {
    (with_premium.b_at(t) - without.b_at(t)) / with_premium.a_at(t)
}

/// Builds both surfaces and prices a premium θ at time t.
pub fn indifference_price_for(t: f64, theta: f64, params: &ModelParams, n_steps: usize) -> Result<f64> {
    let with_premium = ValueSurface::solve(params, theta, n_steps)?;
    if theta == 0.0 {
        return Ok(0.0);
    }
    let without = ValueSurface::solve(params, 0.0, n_steps)?;
    Ok(indifference_price(t, &with_premium, &without))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedform;
    use crate::step::StepFunction;

    fn baseline() -> ModelParams {
        ModelParams::baseline()
    }

    #[test]
    fn terminal_conditions_exact() {
        let p = baseline();
        for theta in [0.0, 0.5, 2.0] {
            let s = ValueSurface::solve(&p, theta, 200).unwrap();
            assert_eq!(*s.a.last().unwrap(), p.alpha);
            assert_eq!(*s.b.last().unwrap(), p.alpha.ln());
            assert_eq!(b_of_t(p.horizon, theta, &p, 10).unwrap(), p.alpha.ln());
            assert!(s.a.iter().all(|&a| a > 0.0));
        }
    }

    #[test]
    fn a_times_g1_is_alpha() {
        let p = baseline();
        let s = ValueSurface::solve(&p, 0.0, 1000).unwrap();
        for (t, &a) in s.grid.nodes().zip(&s.a) {
            assert!((a * closedform::g1(t, &p) - p.alpha).abs() < 1e-12);
        }
        assert_eq!(a_of_t(p.horizon, &p), 0.5);
    }

    #[test]
    fn a_zero_rate_limit() {
        let p = ModelParams { r: 0.0, ..baseline() };
        assert!((a_of_t(4.0, &p) - p.alpha / 7.0).abs() < 1e-15);
    }

    #[test]
    fn zero_premium_drops_mortality_term() {
        let p = baseline();
        let q = ModelParams {
            mortality: StepFunction::constant(0.3),
            ..baseline()
        };
        let b1 = b_of_t(0.0, 0.0, &p, 2000).unwrap();
        let b2 = b_of_t(0.0, 0.0, &q, 2000).unwrap();
        assert_eq!(b1, b2);
    }

    #[test]
    fn surface_node_matches_single_point() {
        let p = baseline();
        let s = ValueSurface::solve(&p, 1.0, 4000).unwrap();
        let direct = b_of_t(0.0, 1.0, &p, 8000).unwrap();
        assert!((s.b[0] - direct).abs() / direct.abs() < 1e-10);
    }

    #[test]
    fn value_boundary_and_monotone() {
        let p = baseline();
        let s = ValueSurface::solve(&p, 0.0, 1000).unwrap();
        for x in [-1.0, 0.0, 2.0] {
            let u = -(-p.alpha * x).exp() / p.alpha;
            assert!((s.value(p.horizon, x) - u).abs() < 1e-15);
        }
        assert!(s.value(0.0, 2.0) > s.value(0.0, 1.0));
        assert!(s.value(0.0, 1.0) < 0.0);
    }

    #[test]
    fn feedback_first_order_condition() {
        let p = baseline();
        let s = ValueSurface::solve(&p, 1.0, 500).unwrap();
        let fc = FeedbackControls::new(&s, &p);
        for t in [0.0, 1.3, 5.0, 9.98, 10.0] {
            for x in [-3.0, 0.0, 1.0, 7.5] {
                let lhs = (-p.alpha * fc.consumption(t, x)).exp();
                let rhs = s.a_at(t) * (-s.a_at(t) * x - s.b_at(t)).exp();
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn feedback_portfolio_matches_closed_form() {
        let p = baseline();
        let s = ValueSurface::solve(&p, 0.0, 1000).unwrap();
        let fc = FeedbackControls::new(&s, &p);
        for t in s.grid.nodes() {
            let cf = closedform::optimal_portfolio(t, &p);
            assert!((fc.portfolio(t) - cf).abs() / cf < 1e-10);
        }
        let q = ModelParams { mu: p.r, ..baseline() };
        let fq = FeedbackControls::new(&s, &q);
        assert_eq!(fq.portfolio(3.0), 0.0);
    }

    #[test]
    fn indifference_zero_premium() {
        let p = baseline();
        assert_eq!(indifference_price_for(0.0, 0.0, &p, 100).unwrap(), 0.0);
        let s = ValueSurface::solve(&p, 0.0, 100).unwrap();
        assert_eq!(indifference_price(0.0, &s, &s), 0.0);
    }

    #[test]
    fn negative_premium_rejected() {
        let p = baseline();
        assert!(ValueSurface::solve(&p, -1.0, 10).is_err());
        assert!(b_of_t(0.0, f64::NAN, &p, 10).is_err());
    }

    #[test]
    fn unfavourable_insurance_never_helps() {
        // With λδ ≤ r, Q^θ - Q^0 = Aθr + λ(e^{-Aθδ} - 1) ≥ Aθ(r - λδ) ≥ 0,
        // so B^θ(0) < B^0(0) for every θ > 0.
        let p = ModelParams { delta: 10.0, ..baseline() };
        let b0 = b_of_t(0.0, 0.0, &p, 4000).unwrap();
        for theta in [0.01, 0.1, 0.5, 1.0, 2.0] {
            assert!(b_of_t(0.0, theta, &p, 4000).unwrap() < b0);
        }
    }

    #[test]
    fn favourable_insurance_helps_at_small_premium() {
        // Baseline has λδ = 1 > r = 0.2: dQ/dθ at θ = 0 is A(r - λδ) < 0.
        let p = baseline();
        let b0 = b_of_t(0.0, 0.0, &p, 4000).unwrap();
        assert!(b_of_t(0.0, 0.1, &p, 4000).unwrap() > b0);
        assert!(b_of_t(0.0, 1.0, &p, 4000).unwrap() < b0);
    }
}
