//! Reproducible random streams.
//!
//! The stream for a replication is fully determined by `(base_seed,
//! replication_index)` and is bitwise identical on every platform:
//!
//! * stream seed: `splitmix64(splitmix64(base_seed) ^ (replication_index * 0x9E3779B97F4A7C15))`
//!   with wrapping arithmetic;
//! * generator: ChaCha8 seeded through `SeedableRng::seed_from_u64(stream_seed)`;
//! * uniform variates: the top 53 bits of a `u64` draw scaled by 2⁻⁵³, giving
//!   values in `[0, 1)`;
//! * Gaussian variates: the Box–Muller transform on a pair of uniforms
//!   `(u1, u2)`, using `1 - u1` so the logarithm argument lies in `(0, 1]`.
//!   Both outputs of a pair are used, cosine branch first. The transcendental
//!   functions come from `libm` so results do not depend on the host C library.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub base_seed: u64,
    pub replication_index: u64,
}

impl SeedSpec {
    pub fn new(base_seed: u64, replication_index: u64) -> Self {
        SeedSpec {
            base_seed,
            replication_index,
        }
    }

    /// The 64-bit seed actually fed to the generator.
    pub fn stream_seed(&self) -> u64 {
        splitmix64(splitmix64(self.base_seed) ^ self.replication_index.wrapping_mul(GOLDEN_GAMMA))
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Single-owner random stream. Hand each replication its own handle.
#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

pub fn make_rng(seed: SeedSpec) -> SimRng {
    SimRng {
        inner: ChaCha8Rng::seed_from_u64(seed.stream_seed()),
        spare_normal: None,
    }
}

impl SimRng {
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform variate on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal variate.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = libm::sqrt(-2.0 * libm::log(u1));
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(radius * libm::sin(angle));
        radius * libm::cos(angle)
    }

    pub fn normals(&mut self, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.normal()).collect()
    }
}
