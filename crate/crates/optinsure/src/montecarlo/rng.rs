use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Two independent ChaCha8 streams per path, keyed by the run seed and the
/// path index: stream `2i` drives the Brownian motion and stream `2i + 1`
/// drives mortality and jump times.
pub(crate) struct PathRng {
    brownian: ChaCha8Rng,
    events: ChaCha8Rng,
}

impl PathRng {
    pub(crate) fn new(seed: u64, path: u64) -> Self {
        let mut brownian = ChaCha8Rng::seed_from_u64(seed);
        let mut events = brownian.clone();
        brownian.set_stream(2 * path);
        events.set_stream(2 * path + 1);
        Self { brownian, events }
    }

    /// Brownian increment over `dt`, built from `substeps` finer normals.
    pub(crate) fn increment(&mut self, dt: f64, substeps: usize) -> f64 {
        if substeps == 1 {
            let z: f64 = self.brownian.sample(StandardNormal);
            return z * dt.sqrt();
        }
        let scale = (dt / substeps as f64).sqrt();
        (0..substeps)
            .map(|_| self.brownian.sample::<f64, _>(StandardNormal) * scale)
            .sum()
    }

    /// Uniform on the open interval (0, 1).
    pub(crate) fn uniform(&mut self) -> f64 {
        loop {
            let u: f64 = self.events.random();
            if u > 0.0 {
                return u;
            }
        }
    }
}
