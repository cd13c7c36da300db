//! Deterministic seed expansion.
//!
//! A run carries one root seed; each stage derives its own subseed from a
//! fixed label so that adding or reordering stages never perturbs the random
//! streams of the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StageRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Subseed for a named stage.
pub fn subseed(root: u64, label: &str) -> u64 {
    splitmix64(root ^ splitmix64(fnv1a(label)))
}

/// Subseed for the `index`-th item inside a stage (restart, instance, ...).
pub fn indexed(root: u64, index: u64) -> u64 {
    splitmix64(root.wrapping_add(splitmix64(index.wrapping_add(1))))
}

pub fn rng(seed: u64) -> StageRng {
    ChaCha8Rng::seed_from_u64(seed)
}
