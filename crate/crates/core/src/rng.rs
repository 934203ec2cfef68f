//! Seeded random stream shared by every generator.
//!
//! The generator is ChaCha8 seeded through `SeedableRng::seed_from_u64`, which
//! expands the 64-bit seed with PCG32. Both steps are value-stable across
//! platforms and crate patch releases. Derived draws are implemented here and
//! never delegated to distribution crates, so the full pipeline from seed to
//! floating-point sample is fixed:
//!
//! * `uniform`: the top 53 bits of one `u64`, scaled by 2⁻⁵³, giving [0, 1).
//! * `index(len)`: `floor(uniform() * len)`, one `u64`.
//! * `standard_normal`: Marsaglia's polar method, two uniforms per attempt.
//!   Each accepted attempt yields a pair; the second variate is held and
//!   returned by the next call.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const UNIT_53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Seed this stream was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * UNIT_53
    }

    /// Uniform on [lo, hi). The result is pulled below `hi` if rounding lands on it.
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        let x = lo + (hi - lo) * self.uniform();
        if x >= hi {
            hi.next_down().max(lo)
        } else {
            x
        }
    }

    /// Uniform index in `0..len`. `len` must be non-zero.
    pub fn index(&mut self, len: usize) -> usize {
        debug_assert!(len > 0);
        ((self.uniform() * len as f64) as usize).min(len - 1)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * f);
                return u * f;
            }
        }
    }
}
