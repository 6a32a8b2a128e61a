// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

//! Random number generation.
//!
//! Every path owns a [`WalkRng`], a xoshiro256++ generator seeded from a
//! 64-bit value through SplitMix64 (the seeding routine of `rand_xoshiro`).
//! Both algorithms are fixed and platform independent, so a seed fully
//! determines a path. Ensemble replicas derive their seeds with
//! [`stable_hash`], which depends only on the base seed and the replica index.

use rand::SeedableRng;

pub type WalkRng = rand_xoshiro::Xoshiro256PlusPlus;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replica `index` in an ensemble started from `base_seed`.
///
/// `mix64(mix64(base_seed) + GOLDEN_GAMMA * (index + 1))`, with wrapping
/// arithmetic. Adding replicas never changes the seeds of existing ones.
pub fn stable_hash(base_seed: u64, index: u64) -> u64 {
    mix64(mix64(base_seed).wrapping_add(GOLDEN_GAMMA.wrapping_mul(index.wrapping_add(1))))
}

pub fn walk_rng(seed: u64) -> WalkRng {
    WalkRng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn stable_hash_is_frozen() {
        // Changing these values breaks reproducibility of every stored run.
        assert_eq!(mix64(0), 0);
        assert_eq!(stable_hash(0, 0), mix64(GOLDEN_GAMMA));
        let seeds: Vec<u64> = (0..4).map(|r| stable_hash(42, r)).collect();
        let mut dedup = seeds.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), 4);
    }

    #[test]
    fn generator_is_deterministic() {
        let mut a = walk_rng(7);
        let mut b = walk_rng(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }
}
