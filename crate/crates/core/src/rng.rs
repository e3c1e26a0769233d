//! Deterministic random number generation.
//!
//! Every stochastic routine takes a 64-bit seed and draws from a
//! [`ChaCha8Rng`] seeded with it. Independent replicas use
//! [`replica_seed`], so results never depend on thread scheduling.

pub use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for replica `index` derived from a parent seed:
/// `mix64(mix64(seed) ^ mix64(index + 1))`.
pub fn replica_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed) ^ mix64(index.wrapping_add(1)))
}
