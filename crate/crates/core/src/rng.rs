//! Seed derivation for reproducible, parallel Monte-Carlo trials.
//!
//! Every stochastic operation takes an explicit `u64` seed and builds its own
//! [`ChaCha8Rng`] from it, so results never depend on evaluation order.
//! Child seeds are derived in counter mode:
//!
//! ```text
//! derive(seed, [c0, c1, ...]) = fold(h = splitmix64(seed),
//!                                    h = splitmix64(h ^ splitmix64(c_i + GOLDEN)))
//! ```
//!
//! A sweep uses `derive(master, [point, trial])` as the trial seed and then
//! `derive(trial_seed, [tag])` with the `TAG_*` constants for the channel,
//! bits and noise of that trial.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub const TAG_CHANNEL: u64 = 1;
pub const TAG_BITS: u64 = 2;
pub const TAG_NOISE: u64 = 3;

/// SplitMix64 finalizer (Steele, Lea & Flood).
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(seed), |h, &c| {
        splitmix64(h ^ splitmix64(c.wrapping_add(GOLDEN)))
    })
}

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
