//! Seed management.
//!
//! All randomness flows from a 64-bit master seed. Child streams are derived
//! with [`derive_seed`], which feeds `(master, tag)` through the SplitMix64
//! finalizer, so that any implementation of the same generator reproduces a
//! run from the master seed alone. The generator behind every stream is
//! ChaCha with 8 rounds ([`ChainRng`]), named in [`GENERATOR`] so result
//! files can record it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every stream.
pub type ChainRng = ChaCha8Rng;

/// Name recorded in output metadata.
pub const GENERATOR: &str = "chacha8 (rand_chacha 0.3, seed_from_u64) + splitmix64 stream derivation";

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream tags used inside the crate. Harness code uses its own tags on top.
pub mod stream {
    pub const SPIKE: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const START: u64 = 3;
    pub const CHAIN: u64 = 4;
    pub const POWER_ITERATION: u64 = 5;
    pub const TRIAL: u64 = 0x7472_6961_6c00_0000;
}

/// SplitMix64 output function (Stafford variant 13).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `tag` of `master`.
///
/// `derive_seed(m, t) = mix64(mix64(m) + (t + 1) * γ)` where γ is the
/// SplitMix64 increment.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    mix64(mix64(master).wrapping_add(tag.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Seed for trial `index` of a run.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    derive_seed(master, stream::TRIAL.wrapping_add(index))
}

pub fn rng_from_seed(seed: u64) -> ChainRng {
    ChainRng::seed_from_u64(seed)
}
