//! Consumption and portfolio rules the simulator can follow.

use optinsure_core::closedform::{self, ClosedFormSolution};
use optinsure_core::hjb::FeedbackControls;
use optinsure_core::{Error, ModelParams, TimeGrid};

/// What a policy may observe at a grid node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepState {
    /// Node index on the simulation grid.
    pub index: usize,
    pub t: f64,
    pub wealth: f64,
    /// `ln φ_v*(t) = -r t + ln φ^Z(t)`.
    pub ln_phi: f64,
    /// No death has occurred up to and including t.
    pub alive: bool,
}

pub trait Policy: Sync {
    /// Constant premium rate θ paid while the contract is in force.
    fn premium(&self) -> f64;

    fn consumption(&self, state: &StepState) -> Result<f64, Error>;

    /// Amount of wealth held in the risky asset.
    fn portfolio(&self, state: &StepState) -> f64;
}

impl Policy for FeedbackControls<'_> {
    fn premium(&self) -> f64 {
        self.theta()
    }

    fn consumption(&self, state: &StepState) -> Result<f64, Error> {
        Ok(FeedbackControls::consumption(self, state.t, state.wealth))
    }

    fn portfolio(&self, state: &StepState) -> f64 {
        FeedbackControls::portfolio(self, state.t)
    }
}

/// HJB feedback controls tabulated on the simulation grid:
/// `c = (A x + B - ln A)/α` and `w = (μ - r)/(σ² A)` at each node.
#[derive(Debug, Clone)]
pub struct TabulatedFeedback {
    theta: f64,
    alpha: f64,
    a: Vec<f64>,
    intercept: Vec<f64>,
    w: Vec<f64>,
}

impl TabulatedFeedback {
    pub fn new(controls: &FeedbackControls<'_>, params: &ModelParams, grid: &TimeGrid) -> Self {
        let surface = controls.surface();
        let mut table = Self {
            theta: controls.theta(),
            alpha: params.alpha,
            a: Vec::with_capacity(grid.n_steps() + 1),
            intercept: Vec::with_capacity(grid.n_steps() + 1),
            w: Vec::with_capacity(grid.n_steps() + 1),
        };
        for t in grid.nodes() {
            let a = surface.a_at(t);
            table.a.push(a);
            table.intercept.push(surface.b_at(t) - a.ln());
            table.w.push(controls.portfolio(t));
        }
        table
    }
}

impl Policy for TabulatedFeedback {
    fn premium(&self) -> f64 {
        self.theta
    }

    #[inline]
    fn consumption(&self, state: &StepState) -> Result<f64, Error> {
        let i = state.index;
        Ok((self.a[i] * state.wealth + self.intercept[i]) / self.alpha)
    }

    #[inline]
    fn portfolio(&self, state: &StepState) -> f64 {
        self.w[state.index]
    }
}

/// Martingale-route optimum: ĉ from the state price density, ŵ
/// deterministic, no insurance.
#[derive(Debug, Clone)]
pub struct ClosedFormPolicy {
    ln_zeta: f64,
    rho: f64,
    alpha: f64,
    w: Vec<f64>,
}

impl ClosedFormPolicy {
    pub fn new(solution: &ClosedFormSolution, params: &ModelParams, grid: &TimeGrid) -> Self {
        Self {
            ln_zeta: solution.zeta_star.ln(),
            rho: params.rho,
            alpha: params.alpha,
            w: grid
                .nodes()
                .map(|t| closedform::optimal_portfolio(t, params))
                .collect(),
        }
    }
}

impl Policy for ClosedFormPolicy {
    fn premium(&self) -> f64 {
        0.0
    }

    #[inline]
    fn consumption(&self, state: &StepState) -> Result<f64, Error> {
        if !state.alive {
            return Err(Error::PostDeathConsumption(0.0));
        }
        Ok(-(self.ln_zeta + state.ln_phi + self.rho * state.t) / self.alpha)
    }

    #[inline]
    fn portfolio(&self, state: &StepState) -> f64 {
        self.w[state.index]
    }
}

/// Fixed consumption rate, risky holding and premium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPolicy {
    pub consumption: f64,
    pub portfolio: f64,
    pub premium: f64,
}

impl Policy for ConstantPolicy {
    fn premium(&self) -> f64 {
        self.premium
    }

    fn consumption(&self, _: &StepState) -> Result<f64, Error> {
        Ok(self.consumption)
    }

    fn portfolio(&self, _: &StepState) -> f64 {
        self.portfolio
    }
}
