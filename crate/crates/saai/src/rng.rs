//! Deterministic seed derivation.
//!
//! Every random decision in the crate draws from a `ChaCha8Rng` keyed by a
//! user seed; independent sub-tasks (restarts, trials, dimensions, event
//! slots) get their own seed derived by folding tag values through a
//! splitmix64 scramble, so adding or reordering one sub-task never perturbs
//! the draws of another.

pub(crate) fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `tags` into `seed`, one scramble round per tag.
pub(crate) fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut s = splitmix64(seed);
    for &t in tags {
        s = splitmix64(s ^ t);
    }
    s
}
