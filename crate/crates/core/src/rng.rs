//! Deterministic seeded random streams.
//!
//! One 64-bit master seed drives an experiment; every replica (and every walk
//! of a pair) gets its own stream index. Streams are ChaCha8 instances keyed
//! by the master seed with the index as the ChaCha stream id, so
//!
//! * identical `(seed, index)` reproduces the identical draw sequence on any
//!   platform and under any worker count, and
//! * distinct indices select distinct ChaCha streams (2^64 of them, each with
//!   period well above 2^64 draws).

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

/// Generator family name recorded in run manifests.
pub const RNG_FAMILY: &str = "ChaCha8 (rand_chacha, seed_from_u64 + set_stream)";

/// A deterministic pseudo-random stream identified by `(master_seed, index)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha8Rng,
    master_seed: u64,
    index: u64,
}

impl RngStream {
    /// Stream `index` of the family keyed by `master_seed`.
    pub fn new(master_seed: u64, index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(index);
        Self {
            inner,
            master_seed,
            index,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Next uniform value in `[0, 1)`; consumes exactly one `u64` of the
    /// stream in both scalar lanes.
    #[inline]
    pub fn unit<F: Scalar>(&mut self) -> F {
        F::unit_from_bits(self.inner.next_u64())
    }

    /// Bernoulli draw with success probability `prob`.
    #[inline]
    pub fn bernoulli<F: Scalar>(&mut self, prob: F) -> bool {
        self.unit::<F>() < prob
    }

    /// Uniform integer in `1..=n` (rejection-free via the `rand` uniform
    /// sampler).
    #[inline]
    pub fn uniform_index(&mut self, n: u64) -> u64 {
        debug_assert!(n >= 1);
        rand::Rng::random_range(&mut self.inner, 1..=n)
    }
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}
