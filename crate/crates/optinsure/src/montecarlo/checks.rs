//! Statistical validation built on the simulator.

use optinsure_core::closedform::{self, BudgetReport, ClosedFormSolution, DiscountedSpendingEstimator};
use optinsure_core::hjb::{FeedbackControls, ValueSurface};
use optinsure_core::stateprice::{self, MortalityDraw};
use optinsure_core::{EstimatorResult, ModelParams, StepFunction};

use super::policy::{ClosedFormPolicy, TabulatedFeedback};
use super::rng::PathRng;
use super::{utility_report, Dynamics, Engine, Measure, SimConfig, SimError, UtilityReport};

/// Zero-mean quantities checked by [`martingale_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// `φ(t) S₁(t) - S₁(0)`.
    DeflatedAsset,
    /// `φ(t)/β(t) - 1`.
    DensityRatio,
    /// `M_λ(t) = N(t) - ∫_0^{t∧τ} λ`.
    CompensatedMortality,
}

impl Observable {
    pub const ALL: [Observable; 3] = [Self::DeflatedAsset, Self::DensityRatio, Self::CompensatedMortality];

    pub fn label(self) -> &'static str {
        match self {
            Self::DeflatedAsset => "phi*S1 - S1(0)",
            Self::DensityRatio => "phi/beta - 1",
            Self::CompensatedMortality => "M_lambda",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MartingaleRow {
    pub t: f64,
    pub observable: Observable,
    pub estimate: EstimatorResult,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleReport {
    pub rows: Vec<MartingaleRow>,
}

impl MartingaleReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Sample mean and SE of the three state-price martingales at each time in
/// `t_list`, under the physical measure with the market's pricing
/// intensity ψ = r/δ. Every time must be a grid node.
pub fn martingale_check(t_list: &[f64], cfg: &SimConfig, params: &ModelParams) -> Result<MartingaleReport, SimError> {
    if cfg.measure != Measure::Physical {
        return Err(SimError::Config("martingale check needs the physical measure".into()));
    }
    let engine = Engine::new(cfg, params)?;
    let mut checkpoints = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let i = cfg
            .grid
            .node_index(t)
            .ok_or_else(|| SimError::Config(format!("martingale time {t} is not a grid node")))?;
        checkpoints.push(i);
    }
    let psi = StepFunction::constant(params.derive().psi);
    let mu = params.mu + cfg.drift_shift;
    let log_drift = mu - 0.5 * params.sigma * params.sigma;
    let half_xi2 = 0.5 * engine.xi * engine.xi;
    let k = checkpoints.len();

    let observe = |i: usize, s1: f64, ln_phi_z: f64, tau: &MortalityDraw| -> Result<[f64; 3], optinsure_core::Error> {
        let t = engine.t[i];
        let ratio = ln_phi_z.exp() * stateprice::phi_n(t, tau, &psi, &params.mortality)?;
        let phi = stateprice::beta(t, params.r) * ratio;
        Ok([
            phi * s1 - 1.0,
            ratio - 1.0,
            stateprice::compensated_mortality(t, tau, &params.mortality),
        ])
    };

    let per_path = engine.map_paths(|path| {
        let mut rng = PathRng::new(cfg.seed, path);
        let tau = stateprice::sample_tau(&params.mortality, params.horizon, rng.uniform());
        let mut out = vec![[0.0; 3]; k];
        let (mut s1, mut ln_phi_z) = (1.0, 0.0);
        for (slot, &i) in checkpoints.iter().enumerate() {
            if i == 0 {
                out[slot] = observe(0, s1, ln_phi_z, &tau)?;
            }
        }
        for i in 0..cfg.grid.n_steps() {
            let h = engine.h[i];
            let dz = rng.increment(h, cfg.brownian_substeps);
            s1 *= (log_drift * h + params.sigma * dz).exp();
            ln_phi_z += -engine.xi * dz - half_xi2 * h;
            for (slot, &c) in checkpoints.iter().enumerate() {
                if c == i + 1 {
                    out[slot] = observe(i + 1, s1, ln_phi_z, &tau)?;
                }
            }
        }
        Ok(out)
    })?;

    let mut rows = Vec::with_capacity(3 * k);
    for (slot, &t) in t_list.iter().enumerate() {
        for (j, observable) in Observable::ALL.into_iter().enumerate() {
            let samples: Vec<f64> = per_path.iter().map(|v| v[slot][j]).collect();
            let estimate = EstimatorResult::from_samples(&samples, cfg.seed);
            rows.push(MartingaleRow {
                t,
                observable,
                estimate,
                pass: estimate.agrees_with(0.0, 3.0),
            });
        }
    }
    Ok(MartingaleReport { rows })
}

/// Estimates the discounted spending of the closed-form optimum by
/// simulation under the pricing measure.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetEngine {
    pub config: SimConfig,
}

impl DiscountedSpendingEstimator for BudgetEngine {
    type Error = SimError;

    /// Samples `∫ β ĉ dt + β(T) Ŵ(T)`. The optimal terminal wealth
    /// `-(ln(ζ* φ(T)) + ρT)/α` coincides with ĉ(T).
    fn discounted_spending(
        &self,
        solution: &ClosedFormSolution,
        params: &ModelParams,
    ) -> Result<EstimatorResult, SimError> {
        let cfg = &self.config;
        if cfg.measure != Measure::PricingVStar {
            return Err(SimError::Config("budget check needs the pricing measure".into()));
        }
        let engine = Engine::new(cfg, params)?;
        let policy = ClosedFormPolicy::new(solution, params, &cfg.grid);
        let beta_t = stateprice::beta(params.horizon, params.r);
        let samples = engine.map_paths(|path| {
            let s = engine.run_path(path, &policy, None)?;
            Ok(s.discounted_consumption + beta_t * s.terminal_consumption)
        })?;
        Ok(EstimatorResult::from_samples(&samples, cfg.seed))
    }
}

/// Budget identity of the closed-form optimum; `cfg` must use the pricing
/// measure.
pub fn budget_check(solution: &ClosedFormSolution, cfg: &SimConfig, params: &ModelParams) -> Result<BudgetReport, SimError> {
    let engine = BudgetEngine { config: cfg.clone() };
    closedform::budget_identity_check(solution, params, &engine)
}

/// `β(T)W(T) + ∫β(c - y·ι) dt - W₀` under the pricing measure with the
/// closed-form controls, with W simulated by Euler. Its mean is zero up
/// to discretisation error.
pub fn discounted_wealth_check(
    solution: &ClosedFormSolution,
    cfg: &SimConfig,
    params: &ModelParams,
) -> Result<EstimatorResult, SimError> {
    if cfg.measure != Measure::PricingVStar {
        return Err(SimError::Config("discounted wealth check needs the pricing measure".into()));
    }
    let engine = Engine::new(cfg, params)?;
    let policy = ClosedFormPolicy::new(solution, params, &cfg.grid);
    let beta_t = stateprice::beta(params.horizon, params.r);
    let samples = engine.map_paths(|path| {
        let s = engine.run_path(path, &policy, None)?;
        Ok(beta_t * s.terminal_wealth + s.discounted_consumption - s.discounted_income - params.initial_wealth)
    })?;
    Ok(EstimatorResult::from_samples(&samples, cfg.seed))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityComparison {
    pub theta: f64,
    /// `V^θ(0, W₀)` from the HJB solver.
    pub target: f64,
    pub report: UtilityReport,
    pub pass: bool,
}

/// Simulates the HJB generator under the HJB feedback controls for premium
/// θ and compares expected utility with `V^θ(0, W₀)`.
pub fn hjb_utility_check(
    theta: f64,
    cfg: &SimConfig,
    params: &ModelParams,
    hjb_steps: usize,
) -> Result<UtilityComparison, SimError> {
    let cfg = cfg
        .clone()
        .with_measure(Measure::Physical)
        .with_dynamics(Dynamics::HjbGenerator);
    let surface = ValueSurface::solve(params, theta, hjb_steps)?;
    let controls = FeedbackControls::new(&surface, params);
    let policy = TabulatedFeedback::new(&controls, params, &cfg.grid);
    let report = utility_report(&cfg, params, &policy)?;
    let target = surface.value(0.0, params.initial_wealth);
    Ok(UtilityComparison {
        theta,
        target,
        report,
        pass: report.estimate.agrees_with(target, 3.0),
    })
}
