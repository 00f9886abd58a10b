//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration error, 2 solver or output
//! failure, 3 validation failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use optinsure_core::closedform::{self, ClosedFormSolution};
use optinsure_core::hjb::{self, ValueSurface};
use optinsure_core::{EstimatorResult, ModelParams, TimeGrid};

use crate::config::{ConfigError, Overrides, RunConfig};
use crate::montecarlo::{self, Dynamics, Measure, SimError};
use crate::report::{format_number, verdict, write_text, OutputError, Table};

/// Relative tolerance of the closed-form versus HJB cross-check.
pub const CROSS_CHECK_TOLERANCE: f64 = 1e-6;

/// Absolute tolerance of the indifference-price bisection self-check.
pub const INDIFFERENCE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "optinsure",
    version,
    about = "Optimal life insurance, consumption and investment under exponential utility"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form and HJB solutions with a cross-check summary.
    Solve(CommonArgs),
    /// Value function at t = 0 across premiums and wealth levels.
    SweepTheta(CommonArgs),
    /// Buyer's indifference prices at t = 0.
    Indifference(CommonArgs),
    /// Monte Carlo validation of the state prices, budget and HJB value.
    Validate(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory [default: ./out].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Monte Carlo seed.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Monte Carlo path count.
    #[arg(long, value_name = "N")]
    pub paths: Option<usize>,
    /// Monte Carlo time step in years.
    #[arg(long, value_name = "X")]
    pub dt: Option<f64>,
    /// Comma-separated premium list.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub theta: Option<Vec<f64>>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver: {0}")]
    Solver(#[from] optinsure_core::Error),
    #[error("simulation: {0}")]
    Simulation(#[from] SimError),
    #[error("output: {0}")]
    Output(#[from] OutputError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Simulation(SimError::Config(_)) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    ValidationFailed,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Success => 0,
            Self::ValidationFailed => 3,
        }
    }
}

/// Result of a subcommand: its outcome and the lines shown to the user.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub outcome: Outcome,
    pub lines: Vec<String>,
}

impl RunSummary {
    fn success(lines: Vec<String>) -> Self {
        Self {
            outcome: Outcome::Success,
            lines,
        }
    }
}

/// Parses `args`, runs the subcommand, prints its lines or error, and
/// returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            summary.outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<RunSummary, CliError> {
    let (args, for_sweep) = match &cli.command {
        Command::SweepTheta(a) => (a, true),
        Command::Solve(a) | Command::Indifference(a) | Command::Validate(a) => (a, false),
    };
    let ctx = Context::load(args, for_sweep)?;
    match &cli.command {
        Command::Solve(_) => cmd_solve(&ctx),
        Command::SweepTheta(_) => cmd_sweep_theta(&ctx),
        Command::Indifference(_) => cmd_indifference(&ctx),
        Command::Validate(_) => cmd_validate(&ctx),
    }
}

/// Loaded configuration, model and output directory for one run.
pub struct Context {
    pub config: RunConfig,
    pub config_path: PathBuf,
    pub params: ModelParams,
    pub out: PathBuf,
}

impl Context {
    pub fn load(args: &CommonArgs, for_sweep: bool) -> Result<Self, CliError> {
        let mut config = RunConfig::load(&args.config)?;
        let overrides = Overrides {
            seed: args.seed,
            paths: args.paths,
            dt: args.dt,
            thetas: args.theta.clone(),
        };
        config.apply(&overrides, for_sweep)?;
        let params = config.model_params()?;
        let out = args
            .out
            .clone()
            .or_else(|| config.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("./out"));
        std::fs::create_dir_all(&out).map_err(|source| OutputError::Io {
            path: out.clone(),
            source,
        })?;
        Ok(Self {
            config,
            config_path: args.config.clone(),
            params,
            out,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn solution(&self) -> Result<ClosedFormSolution, CliError> {
        Ok(closedform::solve_with(&self.params, self.config.solver.theta_max, 41)?)
    }
}

fn theta_label(theta: f64) -> String {
    format!("{theta}")
}

fn write_summary(path: &Path, ctx: &Context, body: &str) -> Result<(), CliError> {
    let mut text = String::new();
    let _ = writeln!(text, "config = {}", ctx.config_path.display());
    let _ = writeln!(text, "seed = {}", ctx.config.mc.seed);
    text.push_str(body);
    text.push_str("\n# resolved configuration\n");
    text.push_str(&ctx.config.to_toml());
    Ok(write_text(path, &text)?)
}

pub fn cmd_solve(ctx: &Context) -> Result<RunSummary, CliError> {
    let p = &ctx.params;
    info!("closed-form solution");
    let sol = ctx.solution()?;
    let grid = TimeGrid::new(0.0, p.horizon, ctx.config.solver.n_steps)?;

    let mut cf = Table::new(["t", "g1", "g2", "w_hat"]);
    for t in grid.nodes() {
        cf.push(vec![t, sol.g1_at(t), sol.g2_at(t), closedform::optimal_portfolio(t, p)]);
    }
    cf.write(&ctx.path("closed_form.csv"))?;

    let thetas = &ctx.config.solver.thetas;
    info!("HJB tables for {} premiums", thetas.len());
    let surfaces = thetas
        .iter()
        .map(|&theta| ValueSurface::solve(p, theta, grid.n_steps()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut header = vec!["t".to_string(), "A".to_string()];
    header.extend(thetas.iter().map(|&th| format!("B_theta_{}", theta_label(th))));
    let mut hjb_table = Table::new(header);
    for (i, t) in grid.nodes().enumerate() {
        let mut row = vec![t, surfaces[0].a[i]];
        row.extend(surfaces.iter().map(|s| s.b[i]));
        hjb_table.push(row);
    }
    hjb_table.write(&ctx.path("hjb.csv"))?;

    let v0 = match thetas.iter().position(|&th| th == 0.0) {
        Some(k) => surfaces[k].value(0.0, p.initial_wealth),
        None => ValueSurface::solve(p, 0.0, grid.n_steps())?.value(0.0, p.initial_wealth),
    };
    let residual = (sol.value - v0).abs() / v0.abs();
    let pass = residual < CROSS_CHECK_TOLERANCE;

    let mut body = String::new();
    let _ = writeln!(body, "W0 = {}", format_number(p.initial_wealth));
    let _ = writeln!(body, "zeta_star = {}", format_number(sol.zeta_star));
    let _ = writeln!(body, "theta_hat = {}", format_number(sol.theta_hat));
    let _ = writeln!(body, "J_star = {}", format_number(sol.value));
    let _ = writeln!(body, "V_hjb(0,W0) = {}", format_number(v0));
    let _ = writeln!(body, "relative_residual = {}", format_number(residual));
    let _ = writeln!(body, "cross_check = {} (tolerance {CROSS_CHECK_TOLERANCE:e})", verdict(pass));
    write_summary(&ctx.path("summary.txt"), ctx, &body)?;

    Ok(RunSummary::success(vec![
        format!("theta_hat = {}", sol.theta_hat),
        format!("J* = {}  V_hjb(0,W0) = {}", format_number(sol.value), format_number(v0)),
        format!("cross-check: {} (relative residual {:e})", verdict(pass), residual),
    ]))
}

/// `B^θ(0)` for each premium, in the order given.
fn b_at_zero(thetas: &[f64], ctx: &Context) -> Result<Vec<f64>, CliError> {
    thetas
        .iter()
        .map(|&th| Ok(hjb::b_of_t(0.0, th, &ctx.params, ctx.config.solver.n_steps)?))
        .collect()
}

fn value_at_zero(a: f64, b: f64, x: f64) -> f64 {
    -(-a * x - b).exp()
}

/// Checks that V(0, x) does not increase in θ for any x; returns the first
/// offending pair of premiums.
pub fn first_monotonicity_violation(thetas: &[f64], values: &[Vec<f64>]) -> Option<(f64, f64)> {
    let mut order: Vec<usize> = (0..thetas.len()).collect();
    order.sort_by(|&i, &j| thetas[i].total_cmp(&thetas[j]));
    order.windows(2).find_map(|w| {
        let (lo, hi) = (w[0], w[1]);
        values[hi]
            .iter()
            .zip(&values[lo])
            .any(|(v_hi, v_lo)| v_hi > v_lo)
            .then_some((thetas[lo], thetas[hi]))
    })
}

pub fn cmd_sweep_theta(ctx: &Context) -> Result<RunSummary, CliError> {
    let p = &ctx.params;
    let sweep = &ctx.config.sweep;
    let a0 = hjb::a_of_t(0.0, p);
    let mut lines = Vec::new();

    let pair = b_at_zero(&[0.0, 1.0], ctx)?;
    let mut fig_a = Table::new(["x", "V_theta0", "V_theta1"]);
    let step = (sweep.x_max - sweep.x_min) / (sweep.x_points - 1) as f64;
    let mut ordered = true;
    for k in 0..sweep.x_points {
        let x = if k + 1 == sweep.x_points { sweep.x_max } else { sweep.x_min + k as f64 * step };
        let (v0, v1) = (value_at_zero(a0, pair[0], x), value_at_zero(a0, pair[1], x));
        ordered &= v0 >= v1;
        fig_a.push(vec![x, v0, v1]);
    }
    fig_a.write(&ctx.path("figure1a.csv"))?;
    lines.push(format!("figure1a ordering V(theta=0) >= V(theta=1): {}", verdict(ordered)));

    let thetas = &sweep.thetas;
    let bs = b_at_zero(thetas, ctx)?;
    let mut header = vec!["theta".to_string()];
    header.extend(sweep.x_values.iter().map(|x| format!("V_x_{x}")));
    let mut fig_b = Table::new(header);
    let values: Vec<Vec<f64>> = bs
        .iter()
        .map(|&b| sweep.x_values.iter().map(|&x| value_at_zero(a0, b, x)).collect())
        .collect();
    for (th, row) in thetas.iter().zip(&values) {
        let mut r = vec![*th];
        r.extend(row);
        fig_b.push(r);
    }
    fig_b.write(&ctx.path("figure1b.csv"))?;

    if thetas.len() < 2 {
        lines.push("theta monotonicity: SKIP (single premium)".into());
    } else {
        match first_monotonicity_violation(thetas, &values) {
            None => lines.push("theta monotonicity V(0,x) nonincreasing in theta: PASS".into()),
            Some((lo, hi)) => lines.push(format!(
                "theta monotonicity V(0,x) nonincreasing in theta: FAIL (V rises from theta={lo} to theta={hi})"
            )),
        }
    }
    Ok(RunSummary::success(lines))
}

/// Solves `V⁰(0, x) = V^θ(0, x - h)` for h by bisection.
pub fn bisect_indifference(a0: f64, b_zero: f64, b_theta: f64, x: f64) -> f64 {
    let target = value_at_zero(a0, b_zero, x);
    let gap = |h: f64| value_at_zero(a0, b_theta, x - h) - target;
    let (mut lo, mut hi) = (-1.0, 1.0);
    while gap(lo) < 0.0 {
        lo *= 2.0;
    }
    while gap(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub fn cmd_indifference(ctx: &Context) -> Result<RunSummary, CliError> {
    let p = &ctx.params;
    let thetas = &ctx.config.solver.thetas;
    let a0 = hjb::a_of_t(0.0, p);
    let b_zero = b_at_zero(&[0.0], ctx)?[0];
    let bs = b_at_zero(thetas, ctx)?;
    let xs = &ctx.config.sweep.x_values;

    let mut table = Table::new(["theta", "h", "max_bisection_gap", "x_independent"]);
    let mut lines = Vec::new();
    for (&theta, &b) in thetas.iter().zip(&bs) {
        let h = if theta == 0.0 { 0.0 } else { (b - b_zero) / a0 };
        let gap = xs
            .iter()
            .map(|&x| (bisect_indifference(a0, b_zero, b, x) - h).abs())
            .fold(0.0, f64::max);
        let pass = gap < INDIFFERENCE_TOLERANCE;
        table.push(vec![theta, h, gap, if pass { 1.0 } else { 0.0 }]);
        lines.push(format!(
            "theta={} h={} x-independence: {}",
            theta_label(theta),
            format_number(h),
            verdict(pass)
        ));
    }
    table.write(&ctx.path("indifference.csv"))?;
    Ok(RunSummary::success(lines))
}

fn estimate_line(label: &str, e: &EstimatorResult, target: f64, pass: bool) -> String {
    format!(
        "{label}: mean={} se={} target={} {}{}",
        format_number(e.mean),
        format_number(e.std_error),
        format_number(target),
        verdict(pass),
        if e.std_error == 0.0 { " (exact)" } else { "" }
    )
}

pub fn cmd_validate(ctx: &Context) -> Result<RunSummary, CliError> {
    let p = &ctx.params;
    let mc = &ctx.config.mc;
    let mut text = String::new();
    let _ = writeln!(text, "seed = {}", mc.seed);
    let _ = writeln!(text, "n_paths = {}", mc.n_paths);
    let _ = writeln!(text, "dt = {}", format_number(mc.dt));
    let _ = writeln!(text, "drift_shift = {}", format_number(mc.drift_shift));
    let mut all = true;

    info!("martingale check");
    let cfg = ctx.config.sim_config(Measure::Physical, Dynamics::SingleLife)?;
    let mart = montecarlo::martingale_check(&ctx.config.martingale_times(), &cfg, p)?;
    let _ = writeln!(text, "\n[martingale]");
    for row in &mart.rows {
        let label = format!("t={} {}", format_number(row.t), row.observable.label());
        let _ = writeln!(text, "{}", estimate_line(&label, &row.estimate, 0.0, row.pass));
    }
    let _ = writeln!(text, "martingale = {}", verdict(mart.pass()));
    all &= mart.pass();

    info!("budget identity");
    let sol = ctx.solution()?;
    let cfg = ctx.config.sim_config(Measure::PricingVStar, Dynamics::SingleLife)?;
    let budget = montecarlo::budget_check(&sol, &cfg, p)?;
    let _ = writeln!(text, "\n[budget]");
    let _ = writeln!(text, "{}", estimate_line("discounted spending", &budget.estimate, budget.target, budget.pass));
    let _ = writeln!(text, "discrepancy = {}", format_number(budget.discrepancy));
    let _ = writeln!(text, "budget = {}", verdict(budget.pass));
    all &= budget.pass;

    let cfg = ctx.config.sim_config(Measure::Physical, Dynamics::HjbGenerator)?;
    let _ = writeln!(text, "\n[utility]");
    let mut utility_pass = true;
    for &theta in &ctx.config.solver.thetas {
        info!("utility check theta={theta}");
        let cmp = montecarlo::hjb_utility_check(theta, &cfg, p, ctx.config.solver.n_steps)?;
        let label = format!("theta={}", theta_label(theta));
        let _ = writeln!(text, "{}", estimate_line(&label, &cmp.report.estimate, cmp.target, cmp.pass));
        let _ = writeln!(
            text,
            "theta={} negative_consumption_fraction={} negative_terminal_wealth_fraction={}",
            theta_label(theta),
            format_number(cmp.report.negative_consumption),
            format_number(cmp.report.negative_terminal_wealth)
        );
        utility_pass &= cmp.pass;
    }
    let _ = writeln!(text, "utility = {}", verdict(utility_pass));
    all &= utility_pass;

    let _ = writeln!(text, "\noverall = {}", verdict(all));
    write_text(&ctx.path("validation.txt"), &text)?;

    Ok(RunSummary {
        outcome: if all { Outcome::Success } else { Outcome::ValidationFailed },
        lines: vec![
            format!("martingale: {}", verdict(mart.pass())),
            format!("budget: {}", verdict(budget.pass)),
            format!("utility: {}", verdict(utility_pass)),
            format!("validation: {}", verdict(all)),
        ],
    })
}
