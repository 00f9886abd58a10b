//! Model configuration and the constants every solver derives from it.
//!
//! Market coefficients r, μ, σ, the discount rate ρ, risk aversion α and the
//! insurance multiplier δ are constants; mortality intensity λ(t) and income
//! y(t) are deterministic step functions. All rates are per year.

use crate::error::{Error, Result};
use crate::step::StepFunction;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Riskless rate.
    pub r: f64,
    /// Drift of the risky asset.
    pub mu: f64,
    /// Volatility of the risky asset, per √year.
    pub sigma: f64,
    /// Subjective discount rate.
    pub rho: f64,
    /// Absolute risk aversion of both utilities.
    pub alpha: f64,
    /// Insurance payout multiplier: a premium θ buys θ·δ at death.
    pub delta: f64,
    /// Horizon T in years.
    pub horizon: f64,
    /// Initial wealth W₀.
    pub initial_wealth: f64,
    /// Mortality intensity λ(t).
    pub mortality: StepFunction,
    /// Income rate y(t).
    pub income: StepFunction,
}

/// ξ, ψ and γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    /// Market price of risk (μ − r)/σ.
    pub xi: f64,
    /// Mortality intensity under the market's pricing measure, r/δ.
    pub psi: f64,
    /// Composite discount ρ − r + ξ²/2.
    pub gamma: f64,
}

impl ModelParams {
    /// Baseline parameter set with W₀ = 1:
    /// (α, y, λ, δ, ρ, r, μ, σ, T) = (0.5, 10, 0.01, 100, 0.2, 0.2, 0.3, 0.25, 10).
    pub fn baseline() -> Self {
        Self {
            r: 0.2,
            mu: 0.3,
            sigma: 0.25,
            rho: 0.2,
            alpha: 0.5,
            delta: 100.0,
            horizon: 10.0,
            initial_wealth: 1.0,
            mortality: StepFunction::constant(0.01),
            income: StepFunction::constant(10.0),
        }
    }

    pub fn validate(self) -> Result<Self> {
        let scalars = [
            ("r", self.r),
            ("mu", self.mu),
            ("sigma", self.sigma),
            ("rho", self.rho),
            ("alpha", self.alpha),
            ("delta", self.delta),
            ("T", self.horizon),
            ("W0", self.initial_wealth),
        ];
        for (name, v) in scalars {
            if !v.is_finite() {
                return Err(Error::NonFinite(name));
            }
        }
        for (name, v) in [
            ("sigma", self.sigma),
            ("alpha", self.alpha),
            ("delta", self.delta),
            ("T", self.horizon),
        ] {
            if v <= 0.0 {
                return Err(Error::NonPositive(name));
            }
        }
        for (field, f) in [("lambda_fn", &self.mortality), ("y_fn", &self.income)] {
            for (segment, value) in f.segments_on(0.0, self.horizon) {
                if !value.is_finite() {
                    return Err(Error::NonFinite(field));
                }
                if value < 0.0 {
                    return Err(Error::NegativeSegment {
                        field,
                        segment,
                        value,
                    });
                }
            }
        }
        Ok(self)
    }

    pub fn derive(&self) -> DerivedConstants {
        let xi = (self.mu - self.r) / self.sigma;
        DerivedConstants {
            xi,
            psi: self.r / self.delta,
            gamma: self.rho - self.r + 0.5 * xi * xi,
        }
    }
}

/// Uniform grid on `[t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t1: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n_steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite()) || t0 >= t1 || n_steps == 0 {
            return Err(Error::InvalidGrid { t0, t1, n_steps });
        }
        Ok(Self { t0, t1, n_steps })
    }

    /// Grid on `[0, horizon]` whose step is as close as possible to `dt`.
    pub fn with_step(horizon: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::NonPositive("dt"));
        }
        let n = libm::round(horizon / dt).max(1.0) as usize;
        Self::new(0.0, horizon, n)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.n_steps as f64
    }

    /// Node `i` in `0..=n_steps`; the last node is exactly `t1`.
    pub fn node(&self, i: usize) -> f64 {
        if i >= self.n_steps {
            self.t1
        } else {
            self.t0 + i as f64 * self.dt()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(move |i| self.node(i))
    }

    /// Index of the node equal to `t` up to rounding, if any.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.dt();
        let i = libm::round(x);
        ((x - i).abs() < 1e-9 && i >= 0.0 && i <= self.n_steps as f64).then_some(i as usize)
    }

    pub fn halved(&self) -> Self {
        Self {
            n_steps: self.n_steps * 2,
            ..*self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn baseline_is_accepted() {
        assert!(ModelParams::baseline().validate().is_ok());
    }

    #[test]
    fn zero_sigma_rejected() {
        let p = ModelParams {
            sigma: 0.0,
            ..ModelParams::baseline()
        };
        assert_eq!(p.validate().unwrap_err().to_string(), "sigma must be positive");
    }

    #[test]
    fn nonpositive_fields_named() {
        for (field, p) in [
            ("alpha", ModelParams { alpha: -1.0, ..ModelParams::baseline() }),
            ("delta", ModelParams { delta: 0.0, ..ModelParams::baseline() }),
            ("T", ModelParams { horizon: 0.0, ..ModelParams::baseline() }),
        ] {
            assert_eq!(p.validate().unwrap_err(), Error::NonPositive(field));
        }
    }

    #[test]
    fn negative_lambda_segment_names_field() {
        let p = ModelParams {
            mortality: StepFunction::new(alloc::vec![5.0], alloc::vec![0.01, -0.01]).unwrap(),
            ..ModelParams::baseline()
        };
        let msg = p.validate().unwrap_err().to_string();
        assert!(msg.contains("lambda_fn"), "{msg}");
    }

    #[test]
    fn negative_income_names_field() {
        let p = ModelParams {
            income: StepFunction::constant(-1.0),
            ..ModelParams::baseline()
        };
        assert!(p.validate().unwrap_err().to_string().contains("y_fn"));
    }

    #[test]
    fn segments_beyond_horizon_ignored() {
        let p = ModelParams {
            mortality: StepFunction::new(alloc::vec![20.0], alloc::vec![0.01, -1.0]).unwrap(),
            ..ModelParams::baseline()
        };
        assert!(p.validate().is_ok());
    }

    #[test]
    fn baseline_derived_constants() {
        // hand arithmetic: (0.3-0.2)/0.25, 0.2/100, 0.2-0.2+0.4^2/2
        let d = ModelParams::baseline().derive();
        assert!((d.xi - 0.4).abs() < 1e-15);
        assert!((d.psi - 0.002).abs() < 1e-18);
        assert!((d.gamma - 0.08).abs() < 1e-15);
    }

    #[test]
    fn zero_excess_return() {
        let p = ModelParams {
            mu: 0.2,
            ..ModelParams::baseline()
        };
        let d = p.derive();
        assert_eq!(d.xi, 0.0);
        assert_eq!(d.gamma, p.rho - p.r);
    }

    #[test]
    fn grid_nodes() {
        let g = TimeGrid::new(0.0, 10.0, 4).unwrap();
        assert_eq!(g.dt(), 2.5);
        assert_eq!(g.node(4), 10.0);
        assert_eq!(g.node_index(5.0), Some(2));
        assert_eq!(g.node_index(5.1), None);
        assert!(TimeGrid::new(1.0, 1.0, 3).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
        assert_eq!(TimeGrid::with_step(10.0, 1e-3).unwrap().n_steps(), 10_000);
    }
}
