//! Monte Carlo point estimates and order-stable summation.

/// Kahan–Babuška–Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for NeumaierSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorResult {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl EstimatorResult {
    /// Sample mean and standard error of the mean, two-pass with compensated sums.
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                n_paths: 0,
                seed,
            };
        }
        let mut s = NeumaierSum::new();
        s.extend(samples.iter().copied());
        let mean = s.value() / n as f64;
        let std_error = if n > 1 {
            let mut ss = NeumaierSum::new();
            ss.extend(samples.iter().map(|x| (x - mean) * (x - mean)));
            libm::sqrt(ss.value() / (n - 1) as f64 / n as f64)
        } else {
            0.0
        };
        Self {
            mean,
            std_error,
            n_paths: n,
            seed,
        }
    }

    /// `|mean - target| < k·SE`; when the standard error is zero (a pathwise
    /// exact quantity) the deviation must instead be below `1e-12`.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        let dev = (self.mean - target).abs();
        dev < k * self.std_error || dev <= 1e-12
    }

    /// Deviation from `target` in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        let dev = self.mean - target;
        if self.std_error > 0.0 {
            dev / self.std_error
        } else if dev == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(dev)
        }
    }
}
