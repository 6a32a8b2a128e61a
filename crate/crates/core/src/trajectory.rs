// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

//! Single-path runs with strided recording.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::walk::{ModelParams, Tracking, WalkState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleSnapshot {
    pub gain: f64,
    pub b: f64,
    pub m: Vec<f64>,
    pub n_martingale: Vec<f64>,
    pub residual: f64,
    pub representation_gap: f64,
    pub tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic_variation: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub n: u64,
    pub position: Vec<i64>,
    pub center: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub martingale: Option<MartingaleSnapshot>,
}

impl Snapshot {
    pub fn capture(state: &WalkState) -> Self {
        let martingale = state.track().map(|t| MartingaleSnapshot {
            gain: t.gain(),
            b: t.b(),
            m: t.m(),
            n_martingale: t.n_martingale(),
            residual: state.cm_decomposition_residual().unwrap_or(0.0),
            representation_gap: t.representation_gap(state.position()),
            tau: t.tau(),
            quadratic_variation: t.quadratic_variation().map(|q| q.matrix()),
        });
        Self {
            n: state.n(),
            position: state.position().to_vec(),
            center: state.center_of_mass(),
            martingale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathOptions {
    pub n_steps: u64,
    pub seed: u64,
    pub record_every: u64,
    pub tracking: Tracking,
}

impl PathOptions {
    pub fn new(n_steps: u64, seed: u64, record_every: u64) -> Self {
        Self {
            n_steps,
            seed,
            record_every,
            tracking: Tracking::Martingale,
        }
    }

    pub fn tracking(mut self, tracking: Tracking) -> Self {
        self.tracking = tracking;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidArgument("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: ModelParams,
    pub options: PathOptions,
    pub snapshots: Vec<Snapshot>,
    pub terminal: Snapshot,
}

impl Trajectory {
    /// Largest decomposition residual over the recorded snapshots.
    pub fn max_residual(&self) -> Option<f64> {
        self.snapshots
            .iter()
            .chain(std::iter::once(&self.terminal))
            .map(|s| s.martingale.as_ref().map(|m| m.residual))
            .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r)))
    }
}

/// Runs one path with martingale tracking.
pub fn run_path(params: &ModelParams, n_steps: u64, seed: u64, record_every: u64) -> Result<Trajectory> {
    run_path_with(params, PathOptions::new(n_steps, seed, record_every), |_| {})
}

/// Runs one path, calling `observe` after every step.
pub fn run_path_with(
    params: &ModelParams,
    options: PathOptions,
    mut observe: impl FnMut(&WalkState),
) -> Result<Trajectory> {
    options.validate()?;
    let mut state = WalkState::new(*params, options.seed, options.tracking)?;
    let mut snapshots = Vec::with_capacity((options.n_steps / options.record_every) as usize);
    for _ in 0..options.n_steps {
        state.step();
        observe(&state);
        if state.n() % options.record_every == 0 {
            snapshots.push(Snapshot::capture(&state));
        }
    }
    Ok(Trajectory {
        params: *params,
        options,
        snapshots,
        terminal: Snapshot::capture(&state),
    })
}
