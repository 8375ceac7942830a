//! Deterministic, splittable random streams.
//!
//! All randomness derives from a 64-bit master seed. A sub-stream is named by
//! a domain tag (what the randomness is for) and an index (which patient,
//! tree, repetition, ...). The pair is hashed with SplitMix64 into a ChaCha8
//! seed, so every sub-stream is independent of the order in which other
//! streams are consumed. This is what lets cohorts, forests and repetitions be
//! generated in parallel and still come out identical.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Domain tags for the sub-streams used across the crate.
pub mod domain {
    pub const PATIENT: u64 = 0x5041_5449;
    pub const SPLIT: u64 = 0x5350_4c54;
    pub const INIT: u64 = 0x494e_4954;
    pub const TRAIN: u64 = 0x5452_4e00;
    pub const WALKS: u64 = 0x5741_4c4b;
    pub const TREE: u64 = 0x5452_4545;
    pub const CALIBRATION: u64 = 0x4341_4c49;
    pub const REPETITION: u64 = 0x5245_5045;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `(domain, index)` under `seed`.
pub fn derive_seed(seed: u64, domain: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ domain) ^ index)
}

pub fn stream(seed: u64, domain: u64, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, domain, index))
}
