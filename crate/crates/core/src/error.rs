use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0} must be positive")]
    NonPositive(&'static str),

    #[error("{0} must be finite")]
    NonFinite(&'static str),

    #[error("{field} must be nonnegative (segment {segment} has value {value})")]
    NegativeSegment {
        field: &'static str,
        segment: usize,
        value: f64,
    },

    #[error("step function: {0}")]
    InvalidStepFunction(&'static str),

    #[error("time grid needs t0 < t1 and at least one step (got [{t0}, {t1}] with {n_steps} steps)")]
    InvalidGrid { t0: f64, t1: f64, n_steps: usize },

    #[error("premium amount must be a nonnegative finite number (got {0})")]
    InvalidPremium(f64),

    #[error("state price density undefined: death at t = {tau} where the mortality intensity is zero")]
    ZeroIntensityAtDeath { tau: f64 },

    #[error("psi_v/lambda undefined at s = {at}: lambda is zero where psi_v is positive")]
    UndefinedRatio { at: f64 },

    #[error("psi_v must be nonnegative (segment {segment} has value {value})")]
    NegativePsi { segment: usize, value: f64 },

    #[error("optimal consumption is defined only before death (state price density {0} is not positive)")]
    PostDeathConsumption(f64),

    #[error("premium objective is not decreasing on [0, {theta_max}] (first violation at theta = {at})")]
    PremiumNotDecreasing { theta_max: f64, at: f64 },
}
