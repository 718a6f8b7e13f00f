//! Seedable PRNG shared by corpus generation, splitting and training.
//!
//! The generator is xoshiro256** (Blackman and Vigna) seeded from a `u64`
//! through SplitMix64, so any implementation with the same two published
//! algorithms reproduces our shuffles and splits exactly.

use rand::{Rng, RngExt, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

pub const DEFAULT_SEED: u64 = 42;

pub type WayRng = Xoshiro256StarStar;

pub fn seeded(seed: u64) -> WayRng {
    Xoshiro256StarStar::seed_from_u64(seed)
}

/// Fisher-Yates shuffle, walking from the back. Draws one bounded integer per
/// position via `random_range`.
pub fn shuffle<T, R: Rng + ?Sized>(items: &mut [T], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}
