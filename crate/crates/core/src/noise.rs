//! Seeded Gaussian measurement noise.
//!
//! Position measurements are corrupted with i.i.d. zero-mean Gaussian noise
//! of configurable variance. Variance zero is an exact pass-through (no RNG
//! draws), so noise-free runs are bit-identical to runs without a noise model.

use crate::numerics::VecN;
use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Debug, Clone)]
pub struct NoiseModel {
    rng: ChaCha12Rng,
    std_dev: f64,
    spare: Option<f64>,
}

impl NoiseModel {
    /// `variance` must be non-negative.
    pub fn new(seed: u64, variance: f64) -> Self {
        assert!(variance >= 0.0 && variance.is_finite());
        Self {
            rng: ChaCha12Rng::seed_from_u64(seed),
            std_dev: libm::sqrt(variance),
            spare: None,
        }
    }

    fn uniform01(&mut self) -> f64 {
        // 53 random bits → uniform in [0, 1).
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// One standard-normal draw (Box-Muller, spare cached).
    fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = loop {
            let u = self.uniform01();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.uniform01();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let phi = 2.0 * core::f64::consts::PI * u2;
        self.spare = Some(r * libm::sin(phi));
        r * libm::cos(phi)
    }

    /// `y = p + w`, `w ~ N(0, variance·I)`. With variance 0 this returns the
    /// input unchanged without advancing the RNG.
    pub fn corrupt(&mut self, p: &VecN) -> VecN {
        if self.std_dev == 0.0 {
            return p.clone();
        }
        let mut y = p.clone();
        for i in 0..y.dim() {
            let w = self.std_dev * self.standard_normal();
            let v = y[i] + w;
            y.as_mut_slice()[i] = v;
        }
        y
    }
}
