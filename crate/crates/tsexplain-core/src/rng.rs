//! Deterministic stream splitting.
//!
//! Every random decision in the crate draws from a ChaCha stream derived from
//! a master seed plus a fixed tuple of context words (purpose tag, sample
//! key, feature, step, draw index). Equal tuples yield equal streams, so
//! per-sample work can run serially or in parallel, in any order, without
//! changing a single bit of the output.
//!
//! The derivation is a splitmix64 hash chain over the words. It is fixed for
//! the life of the on-disk formats: changing it changes every generated
//! dataset and every Monte Carlo estimate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags keep unrelated consumers of the same (sample, step) context
/// on disjoint streams.
pub mod tag {
    pub const NARMA: u64 = 0x01;
    pub const SPIKE: u64 = 0x02;
    pub const SPLIT: u64 = 0x03;
    pub const INIT: u64 = 0x04;
    pub const SHUFFLE: u64 = 0x05;
    pub const WINDOW: u64 = 0x06;
    pub const FIT: u64 = 0x07;
    pub const OCCLUSION: u64 = 0x08;
    pub const MASK_RANDOM: u64 = 0x09;
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Collapses a master seed and context words into a single stream seed.
pub fn derive_seed(master: u64, words: &[u64]) -> u64 {
    let mut state = splitmix64(master ^ 0xA076_1D64_78BD_642F);
    for &w in words {
        state = splitmix64(state ^ splitmix64(w));
    }
    state
}

/// A ChaCha stream for the given context, independent of all other contexts.
pub fn stream(master: u64, words: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, words))
}

/// Stable 64-bit key for a sample id, so streams survive dataset reordering.
pub fn sample_key(id: &str) -> u64 {
    // FNV-1a.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}
