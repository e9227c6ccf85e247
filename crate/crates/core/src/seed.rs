//! Deterministic RNG streams keyed by `(master seed, stream, index)`.
//!
//! Every Monte Carlo task derives its own generator from these keys so that
//! results do not depend on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for task `index` of stream `stream`.
pub fn derive(master: u64, stream: u64, index: u64) -> u64 {
    mix(mix(mix(master) ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93)) ^ index)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn task_rng(master: u64, stream: u64, index: u64) -> ChaCha8Rng {
    rng(derive(master, stream, index))
}

/// Named streams used across the crate.
pub mod streams {
    pub const HOMODYNE: u64 = 1;
    pub const SHOT_NOISE: u64 = 2;
    pub const BOOTSTRAP: u64 = 3;
    pub const EVENTS_NO_DELAY: u64 = 10;
    pub const EVENTS_DELAY: u64 = 11;
    pub const EVENTS_BLOCKED: u64 = 12;
    pub const EVENTS_CLASSES: u64 = 13;
    pub const SQUEEZING_CHECK: u64 = 20;
}
