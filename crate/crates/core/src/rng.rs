//! Deterministic random streams.
//!
//! [`SeededRng`] wraps ChaCha8 (`rand_chacha`). A stream is keyed by a 32-byte
//! seed laid out as `seed (u64 LE) | FNV-1a(sample_id) (u64 LE) | config_index (u64 LE) | 0u64`,
//! so every `(seed, sample, config)` task draws from its own stream regardless of
//! the order tasks run in. Uniform draws take the top 53 bits of `next_u64`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::hash::Fnv1a;

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    /// The root stream for a global seed.
    pub fn new(seed: u64) -> Self {
        Self::from_key(seed, 0, 0)
    }

    /// The sub-stream for one `(sample, config)` task.
    pub fn for_task(seed: u64, sample_id: &str, config_index: u64) -> Self {
        let sample_key = Fnv1a::new().write_str(sample_id).finish();
        Self::from_key(seed, sample_key, config_index)
    }

    fn from_key(seed: u64, sample_key: u64, config_index: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&sample_key.to_le_bytes());
        key[16..24].copy_from_slice(&config_index.to_le_bytes());
        Self {
            seed,
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[0, n)`; `n` must be non-zero.
    pub fn below(&mut self, n: u64) -> u64 {
        // Lemire-style rejection keeps the draw unbiased.
        let zone = u64::MAX - (u64::MAX % n + 1) % n;
        loop {
            let v = self.next_u64();
            if v <= zone {
                return v % n;
            }
        }
    }
}
