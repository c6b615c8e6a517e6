//! Deterministic seed plumbing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derive an independent child seed from a parent seed and a stream tag.
///
/// SplitMix64 finaliser over `seed ^ tag`; distinct tags give decorrelated streams.
pub fn derive(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
