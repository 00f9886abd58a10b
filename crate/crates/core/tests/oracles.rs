//! Independent numerical oracles for the analytic solvers.

use optinsure_core::closedform::{self, dual_objective, DualObjectiveInputs};
use optinsure_core::hjb::{self, FeedbackControls, ValueSurface};
use optinsure_core::{ModelParams, StepFunction};

fn baseline() -> ModelParams {
    ModelParams::baseline()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

fn integrate(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let rule = gauss_legendre(20);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let mid = a + (k as f64 + 0.5) * h;
            rule.iter().map(|&(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

fn g1_oracle(p: &ModelParams) -> f64 {
    integrate(0.0, p.horizon, 50, |s| (-p.r * s).exp()) + (-p.r * p.horizon).exp()
}

fn g2_oracle(p: &ModelParams) -> f64 {
    integrate(0.0, p.horizon, 50, |s| s * (-p.r * s).exp()) + p.horizon * (-p.r * p.horizon).exp()
}

/// B^θ(0) by backward RK4 on `B' = Q + B/g1`, `B(T) = ln α`.
fn b0_oracle(p: &ModelParams, theta: f64, steps: usize) -> f64 {
    let xi = (p.mu - p.r) / p.sigma;
    let g1 = |t: f64| {
        let tau = p.horizon - t;
        (1.0 - (-p.r * tau).exp()) / p.r + (-p.r * tau).exp()
    };
    // step functions are read at the step midpoint so a break is never
    // sampled from the wrong side
    let rhs = |t: f64, b: f64, anchor: f64| {
        let a = p.alpha / g1(t);
        let y = p.income.value_at(anchor);
        let l = p.mortality.value_at(anchor);
        let q = a * ((1.0 - a.ln()) / p.alpha - y + theta * p.r) - p.rho - 0.5 * xi * xi
            + l * ((-a * theta * p.delta).exp() - 1.0);
        q + b / g1(t)
    };
    let h = -p.horizon / steps as f64;
    let mut b = p.alpha.ln();
    for i in 0..steps {
        let t = p.horizon + i as f64 * h;
        let m = t + 0.5 * h;
        let k1 = rhs(t, b, m);
        let k2 = rhs(m, b + 0.5 * h * k1, m);
        let k3 = rhs(m, b + 0.5 * h * k2, m);
        let k4 = rhs(t + h, b + h * k3, m);
        b += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    b
}

#[test]
fn gauss_legendre_rule_is_exact_on_polynomials() {
    let v = integrate(0.0, 2.0, 1, |x| x.powi(7) - 3.0 * x * x);
    assert!((v - (32.0 - 8.0)).abs() < 1e-12);
}

#[test]
fn g1_g2_match_brute_force_quadrature() {
    let p = baseline();
    assert!(rel(closedform::g1(0.0, &p), g1_oracle(&p)) < 1e-8);
    assert!(rel(closedform::g2(0.0, &p), g2_oracle(&p)) < 1e-8);
    assert!((closedform::g1(0.0, &p) - 4.458_658_867_053_549).abs() < 1e-12);
    assert!((closedform::g2(0.0, &p) - 16.203_206_589_620_17).abs() < 1e-11);
}

#[test]
fn b0_matches_rk4_oracle() {
    let p = baseline();
    for theta in [0.0, 1.0] {
        let b = hjb::b_of_t(0.0, theta, &p, hjb::DEFAULT_STEPS).unwrap();
        let oracle = b0_oracle(&p, theta, 20_000);
        assert!(rel(b, oracle) < 1e-8, "theta {theta}: {b} vs {oracle}");
    }
}

#[test]
fn b0_regression_values() {
    let p = baseline();
    let b0 = hjb::b_of_t(0.0, 0.0, &p, hjb::DEFAULT_STEPS).unwrap();
    let b1 = hjb::b_of_t(0.0, 1.0, &p, hjb::DEFAULT_STEPS).unwrap();
    assert!((b0 - 2.950_965_894_420_529_7).abs() < 1e-9);
    assert!((b1 - 2.890_342_006_759_76).abs() < 1e-9);
}

#[test]
fn b0_handles_piecewise_income_and_mortality() {
    let p = ModelParams {
        income: StepFunction::new(vec![6.0], vec![10.0, 2.0]).unwrap(),
        mortality: StepFunction::new(vec![3.5], vec![0.01, 0.04]).unwrap(),
        ..baseline()
    };
    // RK4 steps land on both breaks (T/h = 20000, breaks at multiples of 5e-4)
    for theta in [0.0, 0.5] {
        let b = hjb::b_of_t(0.0, theta, &p, hjb::DEFAULT_STEPS).unwrap();
        let oracle = b0_oracle(&p, theta, 20_000);
        assert!(rel(b, oracle) < 1e-8, "theta {theta}: {b} vs {oracle}");
        let s = ValueSurface::solve(&p, theta, 10_000).unwrap();
        assert!(rel(s.b_at(0.0), oracle) < 1e-8);
    }
}

#[test]
fn richardson_halving_is_below_tolerance() {
    let p = baseline();
    for theta in [0.0, 1.0] {
        let coarse = hjb::b_of_t(0.0, theta, &p, 10_000).unwrap();
        let fine = hjb::b_of_t(0.0, theta, &p, 20_000).unwrap();
        assert!(rel(coarse, fine) < 1e-8);
        let sc = ValueSurface::solve(&p, theta, 10_000).unwrap();
        let sf = ValueSurface::solve(&p, theta, 20_000).unwrap();
        assert!(rel(sc.b_at(0.0), sf.b_at(0.0)) < 1e-8);
    }
}

#[test]
fn cross_solver_identity() {
    for w0 in [0.0, 1.0, 5.0] {
        let p = ModelParams {
            initial_wealth: w0,
            ..baseline()
        };
        let j = closedform::solve(&p).unwrap().value;
        let v = ValueSurface::solve(&p, 0.0, 10_000).unwrap().value(0.0, w0);
        assert!(rel(j, v) < 1e-6, "W0 {w0}: J {j} V {v}");
    }
}

#[test]
fn closed_form_value_regression() {
    for (w0, expected) in [
        (0.0, -0.052_289_175_725_849_61),
        (1.0, -0.046_742_230_063_240_506),
        (5.0, -0.029_846_950_149_786_46),
    ] {
        let p = ModelParams {
            initial_wealth: w0,
            ..baseline()
        };
        assert!(rel(closedform::solve(&p).unwrap().value, expected) < 1e-12);
    }
}

#[test]
fn hjb_residual_is_small() {
    let p = baseline();
    for theta in [0.0, 1.0] {
        let v = |t: f64, x: f64| {
            let a = hjb::a_of_t(t, &p);
            let b = hjb::b_of_t(t, theta, &p, 20_000).unwrap();
            -(-a * x - b).exp()
        };
        for t in [1.0, 4.0, 8.0] {
            for x in [-2.0, 0.0, 3.0] {
                let h = 1e-4;
                let vt = (v(t + h, x) - v(t - h, x)) / (2.0 * h);
                let vx = (v(t, x + h) - v(t, x - h)) / (2.0 * h);
                let vxx = (v(t, x + h) - 2.0 * v(t, x) + v(t, x - h)) / (h * h);
                let c = -vx.ln() / p.alpha;
                let w = -(p.mu - p.r) * vx / (p.sigma * p.sigma * vxx);
                let here = v(t, x);
                let residual = vt - p.rho * here
                    + 0.5 * (w * p.sigma).powi(2) * vxx
                    + (p.r * x + p.income.value_at(t) - c + w * (p.mu - p.r) - theta * p.r) * vx
                    + p.mortality.value_at(t) * (v(t, x + theta * p.delta) - here)
                    - (-p.alpha * c).exp() / p.alpha;
                assert!(residual.abs() / here.abs() < 1e-4, "theta {theta} t {t} x {x}: {residual}");
            }
        }
    }
}

#[test]
fn feedback_controls_match_closed_form_along_optimum() {
    let p = baseline();
    let s = ValueSurface::solve(&p, 0.0, 10_000).unwrap();
    let ctl = FeedbackControls::new(&s, &p);
    for t in [0.0, 2.5, 5.0, 10.0] {
        let w_hat = closedform::optimal_portfolio(t, &p);
        assert!(rel(ctl.portfolio(t), w_hat) < 1e-12);
    }
    // at t = 0 the closed-form ĉ(0) maps back to W0 through the wealth identity
    let sol = closedform::solve(&p).unwrap();
    let c0 = closedform::optimal_consumption(0.0, 1.0, sol.zeta_star, &p).unwrap();
    assert!((closedform::wealth_identity(0.0, c0, &p) - p.initial_wealth).abs() < 1e-9);
    assert!((ctl.consumption(0.0, p.initial_wealth) - c0).abs() < 1e-7);
}

fn bisect_indifference(v0: f64, with: &ValueSurface, x: f64) -> f64 {
    // V^θ(0, x - h) falls as h grows
    let (mut lo, mut hi) = (-1e3, 1e3);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if with.value(0.0, x - mid) > v0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn indifference_price_matches_bisection() {
    let p = baseline();
    let without = ValueSurface::solve(&p, 0.0, 10_000).unwrap();
    for theta in [0.5, 1.0, 2.0] {
        let with = ValueSurface::solve(&p, theta, 10_000).unwrap();
        let h = hjb::indifference_price(0.0, &with, &without);
        for x in [0.0, 3.0, 7.5] {
            let oracle = bisect_indifference(without.value(0.0, x), &with, x);
            assert!((h - oracle).abs() < 1e-8, "theta {theta} x {x}: {h} vs {oracle}");
        }
    }
    assert_eq!(hjb::indifference_price_for(0.0, 0.0, &p, 1_000).unwrap(), 0.0);
}

#[test]
fn dual_at_psi_zero_equals_premium_value() {
    let p = baseline();
    for theta in [0.0, 1.0] {
        let zeta = closedform::zeta_of_theta(theta, &p);
        let inputs = DualObjectiveInputs {
            psi_v: StepFunction::constant(0.0),
            theta,
            zeta,
        };
        let j = dual_objective(&inputs, &p, closedform::DEFAULT_INTERVALS).unwrap();
        assert!(rel(j, closedform::premium_value(theta, &p)) < 1e-8);
    }
}

#[test]
fn dual_grid_minimum_for_unit_premium_is_at_zero() {
    let p = baseline();
    let zeta = closedform::zeta_of_theta(1.0, &p);
    let values: Vec<f64> = (0..=200)
        .map(|k| {
            let inputs = DualObjectiveInputs {
                psi_v: StepFunction::constant(0.02 * k as f64 / 200.0),
                theta: 1.0,
                zeta,
            };
            dual_objective(&inputs, &p, 2_000).unwrap()
        })
        .collect();
    let argmin = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    assert_eq!(argmin, 0);
}
