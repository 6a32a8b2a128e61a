// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

//! Shared inputs for the criterion benchmarks.

use cmerw_core::rng::stable_hash;
use cmerw_core::Point;

/// Deterministic pseudo-random lattice points in `[-range, range]²`.
pub fn lattice_points(count: usize, range: i64, seed: u64) -> Vec<Point> {
    let width = 2 * range as u64 + 1;
    (0..count as u64)
        .map(|i| {
            let x = stable_hash(seed, i);
            [(x % width) as i64 - range, ((x >> 32) % width) as i64 - range]
        })
        .collect()
}
