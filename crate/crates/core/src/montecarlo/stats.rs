// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

//! Estimators and the one-sample empirical-CDF (Kolmogorov–Smirnov) test.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Streaming mean and covariance (Welford's update), fed in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceAccumulator {
    count: u64,
    mean: DVector<f64>,
    comoment: DMatrix<f64>,
}

impl CovarianceAccumulator {
    pub fn new(d: usize) -> Self {
        Self {
            count: 0,
            mean: DVector::zeros(d),
            comoment: DMatrix::zeros(d, d),
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let x = DVector::from_column_slice(x);
        let delta = &x - &self.mean;
        self.mean += &delta / self.count as f64;
        let delta_after = &x - &self.mean;
        self.comoment += &delta * delta_after.transpose();
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Unbiased sample covariance, symmetrized.
    pub fn covariance(&self) -> DMatrix<f64> {
        let denom = self.count.saturating_sub(1).max(1) as f64;
        let c = &self.comoment / denom;
        (&c + c.transpose()) * 0.5
    }
}

/// Sample mean and covariance of the rows `xs`.
pub fn mean_and_covariance<'a>(d: usize, xs: impl IntoIterator<Item = &'a [f64]>) -> (DVector<f64>, DMatrix<f64>) {
    let mut acc = CovarianceAccumulator::new(d);
    for x in xs {
        acc.push(x);
    }
    (acc.mean().clone(), acc.covariance())
}

/// `P(Z ≤ x)` for `Z ~ N(0, variance)`.
pub fn normal_cdf(x: f64, variance: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / (2.0 * variance).sqrt())
}

/// Asymptotic Kolmogorov survival function `P(K > λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub samples: usize,
}

impl KsResult {
    pub fn rejects(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// One-sample KS distance `sup |F_n − F|` of `samples` against `cdf`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let sqrt_n = n.sqrt();
    // Stephens' small-sample correction of the asymptotic distribution.
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * statistic;
    KsResult {
        statistic,
        p_value: kolmogorov_survival(lambda),
        samples: sorted.len(),
    }
}

/// Linearly interpolated empirical quantile, `q ∈ [0, 1]`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}
