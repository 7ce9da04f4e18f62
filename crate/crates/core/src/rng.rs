//! Seeding conventions.
//!
//! Every random stream is a `ChaCha8Rng` seeded from a `u64`. Sweeps derive
//! one seed per `(n, trial)` pair so any subset of a sweep can be rerun on
//! its own, with any number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `trial` at Hilbert dimension `n` of a sweep with base seed `base`.
pub fn trial_seed(base: u64, n: usize, trial: usize) -> u64 {
    mix64(mix64(mix64(base) ^ n as u64) ^ trial as u64)
}

/// Seed for the `k`-th independent substream of `seed`.
pub fn substream(seed: u64, k: u64) -> u64 {
    mix64(seed ^ mix64(k.wrapping_add(0xA076_1D64_78BD_642F)))
}
