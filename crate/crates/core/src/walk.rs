// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

//! The elephant random walk on Z^d.
//!
//! Directions are indexed `0..2d`: index `j < d` is `+e_j`, index `j >= d`
//! is `-e_{j-d}`. At time `n >= 1` the walk picks one of its `n` past steps
//! uniformly, repeats it with probability `p` and otherwise moves in one of
//! the `2d - 1` other directions uniformly. Only the per-direction step counts
//! are needed to sample from that rule, so past steps are not stored.

use std::fmt;

use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::martingale::{conditional_eps_covariance, MartingaleTrack};
use crate::rng::{walk_rng, WalkRng};

/// Width of the band around `p_d` that counts as critical for floating-point `p`.
pub const CRITICAL_BAND: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Diffusive,
    Critical,
    Superdiffusive,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Diffusive => "diffusive",
            Regime::Critical => "critical",
            Regime::Superdiffusive => "superdiffusive",
        })
    }
}

/// `a = (2dp − 1) / (2d − 1)`.
pub fn fundamental_a(d: usize, p: f64) -> Result<f64> {
    check_dim(d)?;
    check_p(p)?;
    let d = d as f64;
    Ok((2.0 * d * p - 1.0) / (2.0 * d - 1.0))
}

/// `p_d = (2d + 1) / (4d)`, the memory at which `a = 1/2`.
pub fn critical_p(d: usize) -> Result<f64> {
    check_dim(d)?;
    let d = d as f64;
    Ok((2.0 * d + 1.0) / (4.0 * d))
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        Err(Error::ZeroDimension)
    } else {
        Ok(())
    }
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::MemoryOutOfRange(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    d: usize,
    p: f64,
    a: f64,
    regime: Regime,
    ratio: Option<(u64, u64)>,
}

impl ModelParams {
    /// Floating-point memory parameter; `p` within [`CRITICAL_BAND`] of `p_d`
    /// is classified as critical.
    pub fn new(d: usize, p: f64) -> Result<Self> {
        let a = fundamental_a(d, p)?;
        let pd = critical_p(d)?;
        let regime = if (p - pd).abs() <= CRITICAL_BAND {
            Regime::Critical
        } else if p < pd {
            Regime::Diffusive
        } else {
            Regime::Superdiffusive
        };
        Ok(Self {
            d,
            p,
            a,
            regime,
            ratio: None,
        })
    }

    /// Memory parameter given as the exact ratio `num / den`; the regime is
    /// decided by integer comparison with `(2d + 1) / (4d)`.
    pub fn from_ratio(d: usize, num: u64, den: u64) -> Result<Self> {
        check_dim(d)?;
        if den == 0 || num > den {
            return Err(Error::InvalidRatio { num, den });
        }
        let p = num as f64 / den as f64;
        let lhs = num as u128 * 4 * d as u128;
        let rhs = (2 * d as u128 + 1) * den as u128;
        let regime = match lhs.cmp(&rhs) {
            std::cmp::Ordering::Less => Regime::Diffusive,
            std::cmp::Ordering::Equal => Regime::Critical,
            std::cmp::Ordering::Greater => Regime::Superdiffusive,
        };
        // At the critical ratio a is exactly 1/2; avoid the rounding of (2dp-1)/(2d-1).
        let a = if regime == Regime::Critical {
            0.5
        } else {
            let (num, den, d) = (num as f64, den as f64, d as f64);
            (2.0 * d * num - den) / ((2.0 * d - 1.0) * den)
        };
        Ok(Self {
            d,
            p,
            a,
            regime,
            ratio: Some((num, den)),
        })
    }

    /// Parses `"0.625"` or `"5/8"`.
    pub fn parse(d: usize, p: &str) -> Result<Self> {
        let p = p.trim();
        if let Some((num, den)) = p.split_once('/') {
            let parse = |s: &str| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::InvalidArgument(format!("bad memory ratio {p:?}")))
            };
            Self::from_ratio(d, parse(num)?, parse(den)?)
        } else {
            let value = p
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad memory parameter {p:?}")))?;
            Self::new(d, value)
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn ratio(&self) -> Option<(u64, u64)> {
        self.ratio
    }

    /// Probability of each of the `2d − 1` non-copied directions, `(1 − p)/(2d − 1)`.
    pub fn deviate_prob(&self) -> f64 {
        (1.0 - self.p) / (2 * self.d - 1) as f64
    }

    pub fn directions(&self) -> usize {
        2 * self.d
    }
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    d: usize,
    p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ratio: Option<(u64, u64)>,
    #[serde(default, skip_deserializing)]
    a: f64,
    #[serde(default, skip_deserializing)]
    regime: Option<Regime>,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        match raw.ratio {
            Some((num, den)) => Self::from_ratio(raw.d, num, den),
            None => Self::new(raw.d, raw.p),
        }
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            d: p.d,
            p: p.p,
            ratio: p.ratio,
            a: p.a,
            regime: Some(p.regime),
        }
    }
}

/// Unit vector of direction index `j` as `(axis, sign)`.
#[inline]
pub fn direction(d: usize, j: usize) -> (usize, i64) {
    if j < d {
        (j, 1)
    } else {
        (j - d, -1)
    }
}

/// Number of past steps taken in each of the `2d` directions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionCounts {
    counts: Vec<u64>,
}

impl DirectionCounts {
    pub fn zeros(d: usize) -> Self {
        Self {
            counts: vec![0; 2 * d],
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() || counts.len() % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "direction counts need an even, nonzero length, got {}",
                counts.len()
            )));
        }
        Ok(Self { counts })
    }

    pub fn dim(&self) -> usize {
        self.counts.len() / 2
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn position(&self) -> Vec<i64> {
        let d = self.dim();
        (0..d)
            .map(|i| self.counts[i] as i64 - self.counts[i + d] as i64)
            .collect()
    }

    /// Diagonal of `Σ_n = Σ_k X_k X_kᵀ`: steps taken along each axis.
    pub fn axis_counts(&self) -> Vec<u64> {
        let d = self.dim();
        (0..d).map(|i| self.counts[i] + self.counts[i + d]).collect()
    }

    #[inline]
    fn bump(&mut self, j: usize) {
        self.counts[j] += 1;
    }
}

/// Law of the next increment given the direction counts of the history.
pub fn increment_distribution(params: &ModelParams, history: &DirectionCounts) -> Vec<f64> {
    let n = history.n();
    let k = params.directions();
    if n == 0 {
        return vec![1.0 / k as f64; k];
    }
    let nf = n as f64;
    let p = params.p();
    let q = params.deviate_prob();
    history
        .as_slice()
        .iter()
        .map(|&c| {
            let c = c as f64;
            (c / nf) * p + ((nf - c) / nf) * q
        })
        .collect()
}

/// `E[X_{n+1} | F_n] = (a / n) S_n`.
pub fn conditional_mean_increment(params: &ModelParams, history: &DirectionCounts) -> Result<Vec<f64>> {
    let n = history.n();
    if n == 0 {
        return Err(Error::HorizonTooSmall {
            what: "conditional_mean_increment",
            min: 1,
            n,
        });
    }
    let scale = params.a() / n as f64;
    Ok(history
        .position()
        .into_iter()
        .map(|s| scale * s as f64)
        .collect())
}

/// Draws a direction index from [`increment_distribution`] with the uniform `u ∈ [0, 1)`.
#[inline]
pub fn sample_direction(params: &ModelParams, history: &[u64], n: u64, u: f64) -> usize {
    let k = history.len();
    if n == 0 {
        return ((u * k as f64) as usize).min(k - 1);
    }
    // Unnormalized weights n·P(j) = q·n + (p − q)·c_j sum to exactly n.
    let nf = n as f64;
    let q = params.deviate_prob();
    let base = q * nf;
    let slope = params.p() - q;
    let target = u * nf;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (j, &c) in history.iter().enumerate() {
        let w = base + slope * c as f64;
        if w > 0.0 {
            acc += w;
            last_positive = j;
            if target < acc {
                return j;
            }
        }
    }
    last_positive
}

/// How much per-step bookkeeping a path carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tracking {
    /// Position, direction counts and center of mass only.
    Position,
    /// Adds `a_n`, `b_n`, `ε_n`, `M_n`, `N_n` and the scalar sums.
    #[default]
    Martingale,
    /// Adds the full predictable quadratic variation `⟨M⟩_n`.
    QuadraticVariation,
}

/// Complete incremental state of one path.
#[derive(Debug, Clone)]
pub struct WalkState {
    params: ModelParams,
    n: u64,
    counts: DirectionCounts,
    position: Vec<i64>,
    position_sum: Vec<i64>,
    track: Option<MartingaleTrack>,
    rng: WalkRng,
}

impl WalkState {
    /// Fails only when martingale tracking is requested for `a ≤ −1`
    /// (`d = 1, p = 0`), where the gain sequence is undefined.
    pub fn new(params: ModelParams, seed: u64, tracking: Tracking) -> Result<Self> {
        let track = match tracking {
            Tracking::Position => None,
            Tracking::Martingale => Some(MartingaleTrack::new(params.dim(), params.a(), false)?),
            Tracking::QuadraticVariation => {
                Some(MartingaleTrack::new(params.dim(), params.a(), true)?)
            }
        };
        let d = params.dim();
        Ok(Self {
            params,
            n: 0,
            counts: DirectionCounts::zeros(d),
            position: vec![0; d],
            position_sum: vec![0; d],
            track,
            rng: walk_rng(seed),
        })
    }

    /// Replays a fixed sequence of direction indices.
    pub fn from_directions(
        params: ModelParams,
        directions: &[usize],
        seed: u64,
        tracking: Tracking,
    ) -> Result<Self> {
        let mut state = Self::new(params, seed, tracking)?;
        for &j in directions {
            if j >= params.directions() {
                return Err(Error::InvalidArgument(format!("direction index {j} out of range")));
            }
            state.apply_direction(j);
        }
        Ok(state)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn position(&self) -> &[i64] {
        &self.position
    }

    pub fn counts(&self) -> &DirectionCounts {
        &self.counts
    }

    /// `Σ_{k ≤ n} S_k`, kept exactly in integers.
    pub fn position_sum(&self) -> &[i64] {
        &self.position_sum
    }

    /// `G_n = (1/n) Σ_{k ≤ n} S_k`; zero at `n = 0`.
    pub fn center_of_mass(&self) -> Vec<f64> {
        let n = self.n.max(1) as f64;
        self.position_sum.iter().map(|&s| s as f64 / n).collect()
    }

    pub fn track(&self) -> Option<&MartingaleTrack> {
        self.track.as_ref()
    }

    pub fn rng_mut(&mut self) -> &mut WalkRng {
        &mut self.rng
    }

    pub fn next_increment_distribution(&self) -> Vec<f64> {
        increment_distribution(&self.params, &self.counts)
    }

    /// Samples and applies one increment; returns its direction index.
    #[inline]
    pub fn step(&mut self) -> usize {
        let u: f64 = self.rng.random();
        let j = sample_direction(&self.params, self.counts.as_slice(), self.n, u);
        self.apply_direction(j);
        j
    }

    pub fn advance(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
    }

    /// Applies the increment with direction index `j` as the next step.
    pub fn apply_direction(&mut self, j: usize) {
        let d = self.params.dim();
        debug_assert!(j < 2 * d);
        if let Some(track) = self.track.as_mut() {
            let cov = track
                .is_detailed()
                .then(|| conditional_eps_covariance(&self.params, &self.counts));
            track.update(&self.position, j, cov.as_ref());
        }
        let (axis, sign) = direction(d, j);
        self.position[axis] += sign;
        self.counts.bump(j);
        self.n += 1;
        for (sum, &s) in self.position_sum.iter_mut().zip(&self.position) {
            *sum += s;
        }
    }

    /// `‖G_n − (b_n M_n − N_n)/n‖`.
    pub fn cm_decomposition_residual(&self) -> Result<f64> {
        let track = self
            .track
            .as_ref()
            .ok_or(Error::TrackingDisabled("cm_decomposition_residual"))?;
        if self.n == 0 {
            return Err(Error::HorizonTooSmall {
                what: "cm_decomposition_residual",
                min: 1,
                n: 0,
            });
        }
        let g = self.center_of_mass();
        let rebuilt = track.center_of_mass();
        Ok(g.iter()
            .zip(&rebuilt)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn fundamental_parameter_examples() {
        assert_eq!(fundamental_a(1, 0.75).unwrap(), 0.5);
        assert_eq!(fundamental_a(1, 0.5).unwrap(), 0.0);
        assert!(close(fundamental_a(2, 0.5).unwrap(), 1.0 / 3.0, 1e-15));
        assert!(matches!(fundamental_a(0, 0.5), Err(Error::ZeroDimension)));
        assert!(matches!(fundamental_a(1, 1.5), Err(Error::MemoryOutOfRange(_))));
        assert!(matches!(fundamental_a(1, -0.1), Err(Error::MemoryOutOfRange(_))));
    }

    #[test]
    fn fundamental_parameter_range() {
        for d in 1..6 {
            let lo = fundamental_a(d, 0.0).unwrap();
            let hi = fundamental_a(d, 1.0).unwrap();
            assert!(close(lo, -1.0 / (2 * d - 1) as f64, 1e-15));
            assert_eq!(hi, 1.0);
        }
    }

    #[test]
    fn critical_values() {
        assert_eq!(critical_p(1).unwrap(), 0.75);
        assert_eq!(critical_p(2).unwrap(), 0.625);
        assert!(critical_p(100_000).unwrap() - 0.5 < 1e-5);
        assert!(matches!(critical_p(0), Err(Error::ZeroDimension)));
    }

    #[test]
    fn regime_classification() {
        assert_eq!(ModelParams::new(1, 0.5).unwrap().regime(), Regime::Diffusive);
        assert_eq!(ModelParams::new(1, 0.75).unwrap().regime(), Regime::Critical);
        assert_eq!(ModelParams::new(1, 0.85).unwrap().regime(), Regime::Superdiffusive);
        assert_eq!(ModelParams::from_ratio(3, 7, 12).unwrap().regime(), Regime::Critical);
        assert_eq!(ModelParams::from_ratio(3, 7, 12).unwrap().a(), 0.5);
        assert_eq!(ModelParams::from_ratio(3, 58, 100).unwrap().regime(), Regime::Diffusive);
        assert_eq!(ModelParams::parse(2, "5/8").unwrap().regime(), Regime::Critical);
        assert_eq!(ModelParams::parse(2, "0.625").unwrap().regime(), Regime::Critical);
        assert!(ModelParams::parse(2, "x").is_err());
        assert!(ModelParams::from_ratio(2, 3, 2).is_err());
    }

    #[test]
    fn regime_switches_at_critical_value() {
        for d in 1..5 {
            let pd = critical_p(d).unwrap();
            assert_eq!(ModelParams::new(d, pd - 1e-12).unwrap().regime(), Regime::Diffusive);
            assert_eq!(ModelParams::new(d, pd).unwrap().regime(), Regime::Critical);
            assert_eq!(ModelParams::new(d, pd + 1e-12).unwrap().regime(), Regime::Superdiffusive);
        }
    }

    #[test]
    fn params_serde_round_trip() {
        let p = ModelParams::from_ratio(2, 5, 8).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let back: ModelParams = serde_json::from_str(&json).unwrap();
        assert_eq!(p, back);
        assert!(json.contains("\"regime\":\"critical\""));
    }

    #[test]
    fn first_step_is_uniform() {
        let params = ModelParams::new(2, 0.3).unwrap();
        let probs = increment_distribution(&params, &DirectionCounts::zeros(2));
        assert_eq!(probs, vec![0.25; 4]);
    }

    #[test]
    fn second_step_after_single_up_step() {
        let params = ModelParams::new(1, 0.75).unwrap();
        let hist = DirectionCounts::from_counts(vec![1, 0]).unwrap();
        let probs = increment_distribution(&params, &hist);
        assert!(close(probs[0], 0.75, 1e-15));
        assert!(close(probs[1], 0.25, 1e-15));
    }

    #[test]
    fn distribution_for_mixed_history() {
        let params = ModelParams::new(2, 0.5).unwrap();
        let hist = DirectionCounts::from_counts(vec![2, 1, 0, 0]).unwrap();
        let probs = increment_distribution(&params, &hist);
        let expected = [7.0 / 18.0, 5.0 / 18.0, 3.0 / 18.0, 3.0 / 18.0];
        for (p, e) in probs.iter().zip(expected) {
            assert!(close(*p, e, 1e-15));
        }
    }

    #[test]
    fn conditional_mean_examples() {
        let params = ModelParams::new(1, 0.75).unwrap();
        let hist = DirectionCounts::from_counts(vec![3, 0]).unwrap();
        let m = conditional_mean_increment(&params, &hist).unwrap();
        assert!(close(m[0], 0.5, 1e-15));

        let zero_drift = ModelParams::new(3, 1.0 / 6.0).unwrap();
        let hist = DirectionCounts::from_counts(vec![4, 1, 0, 0, 2, 0]).unwrap();
        assert!(conditional_mean_increment(&zero_drift, &hist)
            .unwrap()
            .iter()
            .all(|&x| x.abs() < 1e-15));

        let symmetric = DirectionCounts::from_counts(vec![2, 1, 2, 1]).unwrap();
        let params = ModelParams::new(2, 0.9).unwrap();
        assert!(conditional_mean_increment(&params, &symmetric)
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));

        assert!(conditional_mean_increment(&params, &DirectionCounts::zeros(2)).is_err());
    }

    #[test]
    fn sampler_never_picks_zero_probability_direction() {
        let params = ModelParams::new(2, 1.0).unwrap();
        let hist = [0, 3, 0, 0];
        for i in 0..1000 {
            let u = i as f64 / 1000.0;
            assert_eq!(sample_direction(&params, &hist, 3, u), 1);
        }
        assert_eq!(sample_direction(&params, &hist, 3, 1.0 - f64::EPSILON), 1);
    }

    #[test]
    fn persistent_walk_keeps_direction() {
        let params = ModelParams::new(1, 1.0).unwrap();
        let mut state = WalkState::new(params, 11, Tracking::Martingale).unwrap();
        let first = state.step();
        for _ in 0..200 {
            assert_eq!(state.step(), first);
        }
        assert_eq!(state.position()[0].unsigned_abs(), 201);
    }

    #[test]
    fn stepping_is_deterministic() {
        let params = ModelParams::new(3, 0.4).unwrap();
        let mut a = WalkState::new(params, 99, Tracking::Position).unwrap();
        let mut b = WalkState::new(params, 99, Tracking::QuadraticVariation).unwrap();
        for _ in 0..1000 {
            assert_eq!(a.step(), b.step());
        }
        assert_eq!(a.position(), b.position());
    }

    #[test]
    fn counts_and_position_agree() {
        let params = ModelParams::new(3, 0.3).unwrap();
        let mut state = WalkState::new(params, 5, Tracking::Position).unwrap();
        for _ in 0..500 {
            state.step();
            assert_eq!(state.counts().n(), state.n());
            assert_eq!(state.counts().position(), state.position());
            let linf = state.position().iter().map(|s| s.unsigned_abs()).max().unwrap();
            assert!(linf <= state.n());
        }
    }

    #[test]
    fn martingale_tracking_rejected_for_gain_pole() {
        let params = ModelParams::new(1, 0.0).unwrap();
        assert_eq!(params.a(), -1.0);
        assert!(matches!(
            WalkState::new(params, 1, Tracking::Martingale),
            Err(Error::GainDomain(_))
        ));
        let mut state = WalkState::new(params, 1, Tracking::Position).unwrap();
        state.advance(2);
        assert_eq!(state.position(), &[0]);
        state.advance(8);
        assert_eq!(state.n(), 10);
    }

    #[test]
    fn decomposition_residual_at_first_step_is_zero() {
        let params = ModelParams::new(2, 0.6).unwrap();
        let mut state = WalkState::new(params, 3, Tracking::Martingale).unwrap();
        state.step();
        assert_eq!(state.cm_decomposition_residual().unwrap(), 0.0);
    }
}
