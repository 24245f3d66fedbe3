//! Seeded random streams.
//!
//! Every run owns a ChaCha8 generator keyed by its seed; iteration `t` draws
//! from stream `t` of that key, so any iteration can be replayed from
//! `(seed, t)` alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator positioned at the start of stream `stream` for `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = seeded(seed);
    rng.set_stream(stream);
    rng
}

/// Repositions `rng` at the start of `stream`, keeping its key.
pub fn reset_stream(rng: &mut Rng, stream: u64) {
    rng.set_stream(stream);
    rng.set_word_pos(0);
}

/// SplitMix64 finalizer; derives well-separated child seeds from a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
