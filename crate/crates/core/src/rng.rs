//! Seeded randomness.
//!
//! Every random stream in the crate is a `ChaCha8Rng` (rand_chacha 0.9)
//! seeded from a 64-bit value. Sub-seeds are derived from a master seed and a
//! list of integer tags by folding each tag through the SplitMix64 finalizer:
//!
//! ```text
//! state = master
//! for tag in tags: state = splitmix64(state ^ splitmix64(tag + 0x9E3779B97F4A7C15))
//! ```
//!
//! String tags (rule names, stream names) are first hashed with 64-bit FNV-1a.
//! There is no global generator anywhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a.
pub fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Derive a sub-seed from `master` and an ordered list of tags.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(master, |state, &t| splitmix64(state ^ splitmix64(t)))
}

/// Generator for a seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
