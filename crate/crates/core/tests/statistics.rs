// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

//! Monte Carlo calibration of the statistical machinery. Seeds are fixed, so
//! every check is deterministic; bounds are about four standard errors.

use rand::RngExt;
use rand_distr::StandardNormal;

use cmerw_core::martingale::FrozenHistory;
use cmerw_core::montecarlo::ensemble::{run_replicas, EnsembleConfig};
use cmerw_core::montecarlo::stats::{ks_test, normal_cdf};
use cmerw_core::rng::{stable_hash, walk_rng};
use cmerw_core::walk::DirectionCounts;
use cmerw_core::{ModelParams, Tracking, WalkState};

const SEED: u64 = 0x5eed_2026;

/// Under the null hypothesis the KS test at level 1% rejects about 1% of the time.
#[test]
fn ks_test_is_calibrated_on_gaussian_samples() {
    const REPS: u64 = 500;
    const SAMPLES: usize = 100_000;
    const LEVEL: f64 = 0.01;
    let mut rejections = 0;
    for r in 0..REPS {
        let mut rng = walk_rng(stable_hash(SEED, r));
        let xs: Vec<f64> = (0..SAMPLES).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        if ks_test(&xs, |x| normal_cdf(x, 4.0)).rejects(LEVEL) {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / REPS as f64;
    assert!(rate <= 2.0 * LEVEL, "rejection rate {rate}");

    // And it does reject a 5% variance mismatch at this sample size.
    let mut rng = walk_rng(SEED);
    let xs: Vec<f64> = (0..SAMPLES).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
    assert!(ks_test(&xs, |x| normal_cdf(x, 4.0 * 1.05)).rejects(LEVEL));
}

/// `M_n` and `N_n` are centered martingales.
#[test]
fn martingales_are_centered_across_an_ensemble() {
    const R: u64 = 4_000;
    const N: u64 = 1_000;
    for (d, num, den) in [(1, 3, 4), (2, 1, 2), (3, 9, 10)] {
        let params = ModelParams::from_ratio(d, num, den).unwrap();
        let (mut m, mut nn) = (vec![Vec::new(); d], vec![Vec::new(); d]);
        for r in 0..R {
            let mut state = WalkState::new(params, stable_hash(SEED ^ d as u64, r), Tracking::Martingale).unwrap();
            state.advance(N);
            let track = state.track().unwrap();
            for i in 0..d {
                m[i].push(track.m()[i]);
                nn[i].push(track.n_martingale()[i]);
            }
        }
        for series in m.iter().chain(&nn) {
            let mean = series.iter().sum::<f64>() / R as f64;
            let var = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (R - 1) as f64;
            let z = mean / (var / R as f64).sqrt();
            assert!(z.abs() < 4.0, "d={d} p={num}/{den}: z = {z}");
        }
    }
}

/// Resampling the next step from a frozen history reproduces the conditional law.
#[test]
fn frozen_history_moments_and_frequencies() {
    const R: u64 = 200_000;
    let cases = [
        (ModelParams::from_ratio(1, 3, 4).unwrap(), vec![70, 30]),
        (ModelParams::from_ratio(2, 5, 8).unwrap(), vec![10, 4, 0, 6]),
        (ModelParams::from_ratio(3, 1, 5).unwrap(), vec![3, 9, 1, 0, 2, 5]),
    ];
    for (params, counts) in cases {
        let d = params.dim();
        let history = FrozenHistory::new(params, DirectionCounts::from_counts(counts).unwrap()).unwrap();
        let mut rng = walk_rng(SEED);
        let mut hits = vec![0u64; 2 * d];
        let mut sum = vec![0.0; d];
        let mut prod = vec![vec![0.0; d]; d];
        let mut prod_sq = vec![vec![0.0; d]; d];
        for _ in 0..R {
            let j = history.sample_direction(&mut rng);
            hits[j] += 1;
            let e = history.innovation_for(j);
            for i in 0..d {
                sum[i] += e[i];
                for k in 0..d {
                    prod[i][k] += e[i] * e[k];
                    prod_sq[i][k] += (e[i] * e[k]).powi(2);
                }
            }
        }
        let rf = R as f64;
        for (j, &pj) in history.probabilities().iter().enumerate() {
            let se = (rf * pj * (1.0 - pj)).sqrt().max(1.0);
            assert!((hits[j] as f64 - rf * pj).abs() < 4.0 * se, "direction {j}: {} vs {}", hits[j], rf * pj);
        }
        let cov = history.conditional_covariance();
        for i in 0..d {
            let mean = sum[i] / rf;
            let var = prod[i][i] / rf - mean * mean;
            assert!(mean.abs() < 4.0 * (var / rf).sqrt() + 1e-12, "mean[{i}] = {mean}");
            for k in 0..d {
                let m = prod[i][k] / rf;
                let se = ((prod_sq[i][k] / rf - m * m) / rf).sqrt();
                assert!((m - cov[(i, k)]).abs() < 4.0 * se + 1e-12, "cov[{i},{k}] {m} vs {}", cov[(i, k)]);
            }
        }
    }
}

/// `τ_n = Σ a_k² b_{k−1}²` grows like `n³ / (3(a+1)²)`.
#[test]
fn tau_growth_rate() {
    const N: u64 = 100_000;
    for (num, den) in [(1, 2), (2, 3), (3, 4), (17, 20)] {
        let params = ModelParams::from_ratio(1, num, den).unwrap();
        let a = params.a();
        let mut state = WalkState::new(params, 1, Tracking::Martingale).unwrap();
        state.advance(N);
        let tau = state.track().unwrap().tau();
        let ratio = tau / ((N as f64).powi(3) / (3.0 * (a + 1.0).powi(2)));
        assert!((ratio - 1.0).abs() < 0.01, "a={a}: ratio {ratio}");
    }
}

/// Terminal positions at p = 1/2, d = 1 are those of a simple random walk:
/// `(S_n + n)/2` is Binomial(n, 1/2).
#[test]
fn simple_walk_terminal_law_is_binomial() {
    const N: u64 = 20;
    const R: u64 = 100_000;
    let params = ModelParams::from_ratio(1, 1, 2).unwrap();
    let config = EnsembleConfig::new(params, N, R, SEED).tracking(Tracking::Position);
    let replicas = run_replicas(&config, 0..R).unwrap();
    let mut hits = vec![0u64; N as usize + 1];
    for r in &replicas {
        let s = r.terminal_position[0];
        hits[((s + N as i64) / 2) as usize] += 1;
    }
    let mut binom = 1.0f64;
    for (k, &h) in hits.iter().enumerate() {
        if k > 0 {
            binom *= (N as f64 - k as f64 + 1.0) / k as f64;
        }
        let pk = binom / 2f64.powi(N as i32);
        let se = (R as f64 * pk * (1.0 - pk)).sqrt().max(1.0);
        assert!((h as f64 - R as f64 * pk).abs() < 4.5 * se, "k={k}: {h} vs {}", R as f64 * pk);
    }
}
