//! Independent oracles for the acceptance suite.

use optinsure_core::ModelParams;

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
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
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Composite 20-point Gauss–Legendre on `panels` equal panels.
pub fn integrate(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let rule = gauss_legendre(20);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let mid = a + (k as f64 + 0.5) * h;
            rule.iter().map(|&(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

/// `∫_0^T e^{-rs} ds + e^{-rT}`.
pub fn g1_at_zero(p: &ModelParams, panels: usize) -> f64 {
    integrate(0.0, p.horizon, panels, |s| (-p.r * s).exp()) + (-p.r * p.horizon).exp()
}

/// `∫_0^T s e^{-rs} ds + T e^{-rT}`.
pub fn g2_at_zero(p: &ModelParams, panels: usize) -> f64 {
    integrate(0.0, p.horizon, panels, |s| s * (-p.r * s).exp()) + p.horizon * (-p.r * p.horizon).exp()
}

/// B^θ(0) by backward RK4 on `B' = Q + B/g1`, `B(T) = ln α`, with the HJB
/// source term Q written out from the value-function ansatz.
pub fn b_at_zero(p: &ModelParams, theta: f64, steps: usize) -> f64 {
    let xi = (p.mu - p.r) / p.sigma;
    let g1 = |t: f64| {
        let tau = p.horizon - t;
        (1.0 - (-p.r * tau).exp()) / p.r + (-p.r * tau).exp()
    };
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

/// h with `v0(x) = v_theta(x - h)` for increasing `v_theta`, by bisection.
pub fn bisect_offset(v0: impl Fn(f64) -> f64, v_theta: impl Fn(f64) -> f64, x: f64) -> f64 {
    let target = v0(x);
    let (mut lo, mut hi) = (-1e3, 1e3);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if v_theta(x - mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
