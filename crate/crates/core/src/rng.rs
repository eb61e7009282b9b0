//! Seeded random streams.
//!
//! Every stream is a ChaCha8 generator (`rand_chacha::ChaCha8Rng`). Seeding
//! from a 64-bit value follows `rand_core::SeedableRng::seed_from_u64`, which
//! expands the seed with PCG32. Both algorithms are specified independently
//! of platform and pointer width, so a given seed yields the same draws
//! everywhere.
//!
//! Derived streams are obtained with [`RandomStream::split`]: the child seed is
//! `splitmix64(parent_seed ^ splitmix64(index + 1))`. Splitting never touches
//! the parent's state, so a master seed deterministically fans out to any
//! number of independent per-trial streams.
//!
//! Draw transforms:
//!
//! * uniform reals in `[0, 1)` take the top 53 bits of a `u64`,
//! * standard normals use the ziggurat sampler of `rand_distr::StandardNormal`,
//! * integers in a range use `rand`'s unbiased widening-multiply sampler.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha8Rng,
}

/// The SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derives the `index`-th child stream of this stream's seed.
    pub fn split(&self, index: u64) -> Self {
        Self::new(splitmix64(self.seed ^ splitmix64(index.wrapping_add(1))))
    }

    pub fn bit(&mut self) -> bool {
        self.rng.next_u32() >> 31 == 1
    }

    pub fn next_word(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform real in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform integer in `0..n`. Panics when `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            self.uniform() < p
        }
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
