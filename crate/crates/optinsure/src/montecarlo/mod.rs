//! Seeded Monte Carlo simulation of the householder's wealth.
//!
//! Each path owns two ChaCha8 streams keyed by `(seed, path index)`, so a
//! path is the same whichever worker runs it. Per-path results are gathered
//! in index order and reduced serially with compensated summation, which
//! makes every estimate independent of the worker count.
//!
//! The risky asset is stepped exactly (log-Euler), wealth by Euler:
//!
//! ```text
//! dW = (rW + y·ι - c + w(μ - r) - θr·ι) dt + wσ dZ + θδ dN
//! ```
//!
//! with `ι = 1{t < τ}` and a single jump at τ under [`Dynamics::SingleLife`],
//! or `ι = 1` and a full Poisson stream of jumps under
//! [`Dynamics::HjbGenerator`]. Jumps are applied at the end of the step in
//! which they occur; arrival times themselves are sampled exactly by
//! inverse transform. Under [`Measure::PricingVStar`] the Brownian motion
//! carries drift `-ξ` and mortality is switched off.

mod checks;
mod policy;
mod rng;

use optinsure_core::closedform::{annuity, annuity_moment};
use optinsure_core::stateprice::{self, MortalityDraw};
use optinsure_core::{Error, EstimatorResult, ModelParams, TimeGrid};
use rayon::prelude::*;

pub use checks::{
    budget_check, discounted_wealth_check, hjb_utility_check, martingale_check, BudgetEngine,
    MartingaleReport, MartingaleRow, Observable, UtilityComparison,
};
pub use policy::{ClosedFormPolicy, ConstantPolicy, Policy, StepState, TabulatedFeedback};

use rng::PathRng;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] Error),
    #[error("invalid simulation setting: {0}")]
    Config(String),
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Physical,
    /// Pricing measure of the optimal dual point: Brownian drift `-ξ`, no
    /// deaths.
    PricingVStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dynamics {
    /// Income and premium stop at the single death time.
    SingleLife,
    /// Generator of the HJB equation: income always on, every arrival of a
    /// Poisson process with intensity λ pays θδ.
    HjbGenerator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_paths: usize,
    pub grid: TimeGrid,
    pub seed: u64,
    pub measure: Measure,
    pub dynamics: Dynamics,
    /// Rayon worker threads; 0 uses the rayon default.
    pub workers: usize,
    /// Normals summed per Brownian increment. Runs with the same fine
    /// step share one Brownian path across coarser grids.
    pub brownian_substeps: usize,
    /// Added to μ in the simulated dynamics only (fault injection).
    pub drift_shift: f64,
}

impl SimConfig {
    pub fn new(n_paths: usize, grid: TimeGrid, seed: u64) -> Self {
        Self {
            n_paths,
            grid,
            seed,
            measure: Measure::Physical,
            dynamics: Dynamics::SingleLife,
            workers: 0,
            brownian_substeps: 1,
            drift_shift: 0.0,
        }
    }

    pub fn with_measure(self, measure: Measure) -> Self {
        Self { measure, ..self }
    }

    pub fn with_dynamics(self, dynamics: Dynamics) -> Self {
        Self { dynamics, ..self }
    }

    pub fn with_workers(self, workers: usize) -> Self {
        Self { workers, ..self }
    }

    fn check(&self, params: &ModelParams) -> Result<(), SimError> {
        if self.n_paths == 0 {
            return Err(SimError::Config("n_paths must be at least 1".into()));
        }
        if self.brownian_substeps == 0 {
            return Err(SimError::Config("brownian_substeps must be at least 1".into()));
        }
        if self.grid.t0() != 0.0 || (self.grid.t1() - params.horizon).abs() > 1e-12 {
            return Err(SimError::Config(format!(
                "grid must span [0, {}], got [{}, {}]",
                params.horizon,
                self.grid.t0(),
                self.grid.t1()
            )));
        }
        if !self.drift_shift.is_finite() {
            return Err(SimError::Config("drift_shift must be finite".into()));
        }
        Ok(())
    }
}

/// Full record of one simulated path. All trajectories have one entry per
/// grid node; `dz[0]` is 0 and `dz[i]` is the increment over step `i - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    pub dz: Vec<f64>,
    pub tau: MortalityDraw,
    pub s1: Vec<f64>,
    pub wealth: Vec<f64>,
    pub consumption: Vec<f64>,
    /// `Σ e^{-ρ t_i} u(c_i) Δt`, left endpoints.
    pub running_utility: f64,
}

impl PathBundle {
    fn with_capacity(n: usize) -> Self {
        Self {
            dz: Vec::with_capacity(n),
            tau: MortalityDraw::never(),
            s1: Vec::with_capacity(n),
            wealth: Vec::with_capacity(n),
            consumption: Vec::with_capacity(n),
            running_utility: 0.0,
        }
    }
}

/// Scalar summaries of one path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathTotals {
    pub running_utility: f64,
    pub terminal_wealth: f64,
    pub terminal_consumption: f64,
    /// `∫ β c dt` with c linear between nodes, integrated exactly.
    pub discounted_consumption: f64,
    /// `∫ β y ι dt`, exact per step.
    pub discounted_income: f64,
    pub negative_consumption_steps: usize,
    pub tau: MortalityDraw,
}

/// `u(x) = -e^{-αx}/α`.
#[inline]
pub fn utility(x: f64, alpha: f64) -> f64 {
    -(-alpha * x).exp() / alpha
}

/// Grid-dependent constants shared by all paths.
pub(crate) struct Engine<'a> {
    pub(crate) cfg: &'a SimConfig,
    pub(crate) params: &'a ModelParams,
    pub(crate) xi: f64,
    pub(crate) t: Vec<f64>,
    pub(crate) h: Vec<f64>,
    discount: Vec<f64>,
    /// `∫ β` over each step and its first moment over h, for the exact
    /// integral of β times a linear function.
    beta_int: Vec<f64>,
    beta_slope: Vec<f64>,
    income: Vec<f64>,
}

impl<'a> Engine<'a> {
    pub(crate) fn new(cfg: &'a SimConfig, params: &'a ModelParams) -> Result<Self, SimError> {
        cfg.check(params)?;
        let n = cfg.grid.n_steps();
        let t: Vec<f64> = cfg.grid.nodes().collect();
        let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
        let r = params.r;
        let mut engine = Self {
            cfg,
            params,
            xi: params.derive().xi,
            discount: t.iter().map(|&s| (-params.rho * s).exp()).collect(),
            beta_int: Vec::with_capacity(n),
            beta_slope: Vec::with_capacity(n),
            income: Vec::with_capacity(n),
            t,
            h,
        };
        for i in 0..n {
            let (ti, hi) = (engine.t[i], engine.h[i]);
            let beta = (-r * ti).exp();
            engine.beta_int.push(beta * annuity(r, hi));
            engine.beta_slope.push(beta * annuity_moment(r, hi) / hi);
            engine.income.push(params.income.value_at(ti + 0.5 * hi));
        }
        Ok(engine)
    }

    fn first_death(&self, rng: &mut PathRng) -> MortalityDraw {
        let horizon = self.params.horizon;
        match (self.cfg.measure, self.cfg.dynamics) {
            (Measure::PricingVStar, _) => MortalityDraw::never(),
            (Measure::Physical, Dynamics::SingleLife) => {
                stateprice::sample_tau(&self.params.mortality, horizon, rng.uniform())
            }
            (Measure::Physical, Dynamics::HjbGenerator) => {
                match stateprice::next_arrival(&self.params.mortality, 0.0, horizon, rng.uniform()) {
                    Some(tau) => MortalityDraw::new(tau, horizon),
                    None => MortalityDraw::never(),
                }
            }
        }
    }

    pub(crate) fn run_path<P: Policy>(
        &self,
        path: u64,
        policy: &P,
        mut record: Option<&mut PathBundle>,
    ) -> Result<PathTotals, Error> {
        let p = self.params;
        let n = self.cfg.grid.n_steps();
        let substeps = self.cfg.brownian_substeps;
        let pricing = self.cfg.measure == Measure::PricingVStar;
        let generator = self.cfg.dynamics == Dynamics::HjbGenerator;
        let mu = p.mu + self.cfg.drift_shift;
        let theta = policy.premium();
        let payout = theta * p.delta;
        let half_xi2 = 0.5 * self.xi * self.xi;
        let log_drift = mu - 0.5 * p.sigma * p.sigma;

        let mut rng = PathRng::new(self.cfg.seed, path);
        let tau = self.first_death(&mut rng);
        let mut next_jump = tau.tau;

        let mut wealth = p.initial_wealth;
        let mut ln_phi_z = 0.0;
        let mut s1 = 1.0;
        let mut alive = true;
        let mut dz_prev = 0.0;

        let mut running = 0.0;
        let mut spent = 0.0;
        let mut earned = 0.0;
        let mut negative = 0;
        let mut c_prev = 0.0;

        for i in 0..=n {
            let t = self.t[i];
            let state = StepState {
                index: i,
                t,
                wealth,
                ln_phi: -p.r * t + ln_phi_z,
                alive,
            };
            let c = policy.consumption(&state)?;
            if let Some(rec) = record.as_deref_mut() {
                rec.dz.push(dz_prev);
                rec.s1.push(s1);
                rec.wealth.push(wealth);
                rec.consumption.push(c);
            }
            if i > 0 {
                let k = i - 1;
                spent += c_prev * (self.beta_int[k] - self.beta_slope[k]) + c * self.beta_slope[k];
            }
            if i == n {
                c_prev = c;
                break;
            }
            c_prev = c;

            let h = self.h[i];
            running += self.discount[i] * utility(c, p.alpha) * h;
            if c < 0.0 {
                negative += 1;
            }

            let w = policy.portfolio(&state);
            let dz_sample = rng.increment(h, substeps);
            let dz = if pricing { dz_sample - self.xi * h } else { dz_sample };
            let flows = if generator || pricing || alive { 1.0 } else { 0.0 };
            let y = self.income[i];
            earned += y * flows * self.beta_int[i];

            wealth += (p.r * wealth + (y - theta * p.r) * flows - c + w * (mu - p.r)) * h
                + w * p.sigma * dz;
            ln_phi_z += -self.xi * dz - half_xi2 * h;
            if record.is_some() {
                s1 *= (log_drift * h + p.sigma * dz).exp();
            }

            let t_next = self.t[i + 1];
            if generator {
                while next_jump <= t_next {
                    wealth += payout;
                    alive = false;
                    next_jump = stateprice::next_arrival(&p.mortality, next_jump, p.horizon, rng.uniform())
                        .unwrap_or(f64::INFINITY);
                }
            } else if alive && tau.tau <= t_next {
                wealth += payout;
                alive = false;
            }
            dz_prev = dz;
        }

        let running_utility = running;
        if let Some(rec) = record {
            rec.tau = tau;
            rec.running_utility = running_utility;
        }
        Ok(PathTotals {
            running_utility,
            terminal_wealth: wealth,
            terminal_consumption: c_prev,
            discounted_consumption: spent,
            discounted_income: earned,
            negative_consumption_steps: negative,
            tau,
        })
    }

    /// Runs `f` for every path index in parallel and returns the results
    /// in index order.
    pub(crate) fn map_paths<T, F>(&self, f: F) -> Result<Vec<T>, SimError>
    where
        T: Send,
        F: Fn(u64) -> Result<T, Error> + Sync + Send,
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.cfg.workers)
            .build()?;
        let n = self.cfg.n_paths as u64;
        Ok(pool.install(|| (0..n).into_par_iter().map(&f).collect::<Result<Vec<T>, Error>>())?)
    }
}

/// Lazily simulates full path records in index order.
pub fn simulate_paths<'a, P: Policy>(
    cfg: &'a SimConfig,
    params: &'a ModelParams,
    policy: &'a P,
) -> Result<impl Iterator<Item = Result<PathBundle, SimError>> + 'a, SimError> {
    let engine = Engine::new(cfg, params)?;
    let nodes = cfg.grid.n_steps() + 1;
    Ok((0..cfg.n_paths as u64).map(move |path| {
        let mut bundle = PathBundle::with_capacity(nodes);
        engine.run_path(path, policy, Some(&mut bundle))?;
        Ok(bundle)
    }))
}

/// Mean of `Σ e^{-ρt}u(c)Δt + e^{-ρT}u(W(T))` over recorded paths.
pub fn estimate_utility(paths: &[PathBundle], params: &ModelParams, seed: u64) -> EstimatorResult {
    let terminal_discount = (-params.rho * params.horizon).exp();
    let samples: Vec<f64> = paths
        .iter()
        .map(|b| {
            let w_t = b.wealth.last().copied().unwrap_or(params.initial_wealth);
            b.running_utility + terminal_discount * utility(w_t, params.alpha)
        })
        .collect();
    EstimatorResult::from_samples(&samples, seed)
}

/// Expected utility with diagnostics on negative consumption and wealth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityReport {
    pub estimate: EstimatorResult,
    /// Fraction of path-steps with c < 0.
    pub negative_consumption: f64,
    /// Fraction of paths with W(T) < 0.
    pub negative_terminal_wealth: f64,
}

/// Parallel expected-utility estimate without storing trajectories.
pub fn utility_report<P: Policy>(cfg: &SimConfig, params: &ModelParams, policy: &P) -> Result<UtilityReport, SimError> {
    let engine = Engine::new(cfg, params)?;
    let totals = engine.map_paths(|path| engine.run_path(path, policy, None))?;
    let terminal_discount = (-params.rho * params.horizon).exp();
    let samples: Vec<f64> = totals
        .iter()
        .map(|s| s.running_utility + terminal_discount * utility(s.terminal_wealth, params.alpha))
        .collect();
    let negative_steps: usize = totals.iter().map(|s| s.negative_consumption_steps).sum();
    let negative_wealth = totals.iter().filter(|s| s.terminal_wealth < 0.0).count();
    let n = totals.len() as f64;
    Ok(UtilityReport {
        estimate: EstimatorResult::from_samples(&samples, cfg.seed),
        negative_consumption: negative_steps as f64 / (n * cfg.grid.n_steps() as f64),
        negative_terminal_wealth: negative_wealth as f64 / n,
    })
}

/// Per-path scalar summaries, in path order.
pub fn path_totals<P: Policy>(cfg: &SimConfig, params: &ModelParams, policy: &P) -> Result<Vec<PathTotals>, SimError> {
    let engine = Engine::new(cfg, params)?;
    engine.map_paths(|path| engine.run_path(path, policy, None))
}
