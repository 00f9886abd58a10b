//! Right-continuous piecewise-constant functions of time.
//!
//! Mortality intensity λ(t), income y(t) and candidate pricing intensities
//! ψ_v(t) are all deterministic step functions, so every integral of them is
//! computed exactly segment by segment.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A function equal to `values[0]` before `breaks[0]`, `values[i]` on
/// `[breaks[i-1], breaks[i])`, and `values[n]` from the last break onwards.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn constant(value: f64) -> Self {
        Self {
            breaks: Vec::new(),
            values: alloc::vec![value],
        }
    }

    /// `values.len()` must be `breaks.len() + 1`; breaks strictly increasing.
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::InvalidStepFunction(
                "need exactly one more value than breakpoints",
            ));
        }
        if breaks.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidStepFunction("breakpoints must be finite"));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidStepFunction(
                "breakpoints must be strictly increasing",
            ));
        }
        Ok(Self { breaks, values })
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn segment_of(&self, t: f64) -> usize {
        self.breaks.partition_point(|&b| b <= t)
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.values[self.segment_of(t)]
    }

    /// Segments `(lo, hi, value)` covering `[a, b]`, clipped to it, in order.
    pub fn pieces(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let first = self.segment_of(a);
        let last = if b > a { self.segment_of(b) } else { first };
        (first..=last).filter_map(move |i| {
            let lo = if i == 0 { a } else { self.breaks[i - 1].max(a) };
            let hi = if i == self.breaks.len() {
                b
            } else {
                self.breaks[i].min(b)
            };
            (hi > lo).then_some((lo, hi, self.values[i]))
        })
    }

    /// Index and value of every segment that intersects `[a, b]`.
    pub fn segments_on(&self, a: f64, b: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
        let first = self.segment_of(a);
        let last = self.segment_of(b);
        (first..=last).map(move |i| (i, self.values[i]))
    }

    /// Exact `∫_a^b f(u) du`; negative when `b < a`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if b < a {
            return -self.integral(b, a);
        }
        self.pieces(a, b).map(|(lo, hi, v)| v * (hi - lo)).sum()
    }

    /// Smallest `s` in `[from, until]` with `∫_from^s f = target`, for a
    /// nonnegative function and `target ≥ 0`. `None` when the total over
    /// `[from, until]` falls short.
    pub fn first_passage(&self, from: f64, until: f64, target: f64) -> Option<f64> {
        let mut acc = 0.0;
        for (lo, hi, v) in self.pieces(from, until) {
            let mass = v * (hi - lo);
            if v > 0.0 && acc + mass >= target {
                let s = lo + (target - acc) / v;
                return Some(s.clamp(lo, hi));
            }
            acc += mass;
        }
        None
    }

    /// Interior breakpoints strictly inside `(a, b)`.
    pub fn breaks_within(&self, a: f64, b: f64) -> impl Iterator<Item = f64> + '_ {
        self.breaks.iter().copied().filter(move |&x| x > a && x < b)
    }
}
