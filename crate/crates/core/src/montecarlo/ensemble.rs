// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

//! Seeded, order-independent ensembles of independent paths.
//!
//! Replica `r` is driven by `stable_hash(base_seed, r)`. Replicas run on a
//! bounded rayon pool and are collected back in index order, so every result
//! is bitwise identical for any worker count.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::limit_constants;
use crate::martingale::h1_deviation;
use crate::rng::stable_hash;
use crate::walk::{ModelParams, Regime, Tracking, WalkState};

use super::stats::{ks_test, mean_and_covariance, normal_cdf, KsResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub params: ModelParams,
    /// Horizon of every replica.
    pub n: u64,
    pub replicas: u64,
    pub base_seed: u64,
    pub max_parallelism: usize,
    pub tracking: Tracking,
    /// Intermediate times at which the center of mass is recorded (sorted, `< n`).
    #[serde(default)]
    pub checkpoints: Vec<u64>,
}

impl EnsembleConfig {
    pub fn new(params: ModelParams, n: u64, replicas: u64, base_seed: u64) -> Self {
        Self {
            params,
            n,
            replicas,
            base_seed,
            max_parallelism: 1,
            tracking: Tracking::Position,
            checkpoints: Vec::new(),
        }
    }

    pub fn parallelism(mut self, workers: usize) -> Self {
        self.max_parallelism = workers;
        self
    }

    pub fn tracking(mut self, tracking: Tracking) -> Self {
        self.tracking = tracking;
        self
    }

    pub fn checkpoints(mut self, mut checkpoints: Vec<u64>) -> Self {
        checkpoints.sort_unstable();
        checkpoints.dedup();
        self.checkpoints = checkpoints;
        self
    }

    pub fn replica_seed(&self, index: u64) -> u64 {
        stable_hash(self.base_seed, index)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.replicas == 0 {
            return Err(Error::InvalidArgument("ensemble needs n >= 1 and at least one replica".into()));
        }
        if self.max_parallelism == 0 {
            return Err(Error::InvalidArgument("max_parallelism must be at least 1".into()));
        }
        if self.checkpoints.iter().any(|&c| c == 0 || c >= self.n) {
            return Err(Error::InvalidArgument("checkpoints must lie in [1, n)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaOutcome {
    pub index: u64,
    pub seed: u64,
    pub terminal_position: Vec<i64>,
    pub terminal_center: Vec<f64>,
    /// Center of mass at each configured checkpoint.
    pub checkpoint_centers: Vec<Vec<f64>>,
    /// Largest decomposition residual over checkpoints and horizon.
    pub residual_max: Option<f64>,
    /// Terminal deviation of the normalized quadratic variation from its limit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1_deviation: Option<f64>,
}

/// Runs a single replica of `config`.
pub fn run_replica(config: &EnsembleConfig, index: u64) -> Result<ReplicaOutcome> {
    let seed = config.replica_seed(index);
    let mut state = WalkState::new(config.params, seed, config.tracking)?;
    let mut checkpoint_centers = Vec::with_capacity(config.checkpoints.len());
    let mut residual_max: Option<f64> = None;
    let mut note_residual = |state: &WalkState| {
        if let Ok(r) = state.cm_decomposition_residual() {
            residual_max = Some(residual_max.map_or(r, |m| m.max(r)));
        }
    };
    for &c in &config.checkpoints {
        state.advance(c - state.n());
        checkpoint_centers.push(state.center_of_mass());
        note_residual(&state);
    }
    state.advance(config.n - state.n());
    note_residual(&state);
    let h1_deviation = match config.tracking {
        Tracking::QuadraticVariation if config.params.regime() != Regime::Superdiffusive => Some(h1_deviation(&state)?),
        _ => None,
    };
    Ok(ReplicaOutcome {
        index,
        seed,
        terminal_position: state.position().to_vec(),
        terminal_center: state.center_of_mass(),
        checkpoint_centers,
        residual_max,
        h1_deviation,
    })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Resource(e.to_string()))
}

/// Runs replicas `range` of `config`, returned in index order.
pub fn run_replicas(config: &EnsembleConfig, range: std::ops::Range<u64>) -> Result<Vec<ReplicaOutcome>> {
    config.validate()?;
    if config.max_parallelism == 1 {
        return range.map(|r| run_replica(config, r)).collect();
    }
    pool(config.max_parallelism)?.install(|| {
        range
            .into_par_iter()
            .map(|r| run_replica(config, r))
            .collect::<Result<Vec<_>>>()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleAggregate {
    /// Sample mean of the terminal center of mass.
    pub mean: DVector<f64>,
    /// Sample covariance of the terminal center of mass.
    pub covariance: DMatrix<f64>,
    /// Per-coordinate normality of the normalized terminal center of mass
    /// against the Gaussian limit; absent when the regime has none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normality: Option<Vec<KsResult>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub config: EnsembleConfig,
    pub replicas: Vec<ReplicaOutcome>,
    pub aggregate: EnsembleAggregate,
}

/// Scale that makes the center of mass converge in law: `√n` (diffusive) or `√(n log n)` (critical).
pub fn clt_scale(regime: Regime, n: u64) -> Option<f64> {
    let nf = n as f64;
    match regime {
        Regime::Diffusive => Some(nf.sqrt()),
        Regime::Critical if n >= 2 => Some((nf * nf.ln()).sqrt()),
        _ => None,
    }
}

impl EnsembleResult {
    pub fn from_replicas(config: EnsembleConfig, replicas: Vec<ReplicaOutcome>) -> Result<Self> {
        if replicas.len() as u64 != config.replicas {
            return Err(Error::InvalidArgument(format!(
                "expected {} replicas, got {}",
                config.replicas,
                replicas.len()
            )));
        }
        let d = config.params.dim();
        let (mean, covariance) = mean_and_covariance(d, replicas.iter().map(|r| r.terminal_center.as_slice()));
        let normality = match (
            clt_scale(config.params.regime(), config.n),
            limit_constants(&config.params).and_then(|c| c.clt_var()),
        ) {
            (Some(scale), Ok(var)) => Some(
                (0..d)
                    .map(|i| {
                        let xs: Vec<f64> = replicas.iter().map(|r| r.terminal_center[i] / scale).collect();
                        ks_test(&xs, |x| normal_cdf(x, var))
                    })
                    .collect(),
            ),
            _ => None,
        };
        let residual_max = replicas
            .iter()
            .map(|r| r.residual_max)
            .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r)));
        Ok(Self {
            config,
            replicas,
            aggregate: EnsembleAggregate {
                mean,
                covariance,
                normality,
                residual_max,
            },
        })
    }

    pub fn terminal_centers(&self) -> impl Iterator<Item = &[f64]> {
        self.replicas.iter().map(|r| r.terminal_center.as_slice())
    }
}

pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleResult> {
    let replicas = run_replicas(config, 0..config.replicas)?;
    EnsembleResult::from_replicas(config.clone(), replicas)
}

/// Replicas completed so far, as stored on disk between chunks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleCheckpoint {
    pub config: EnsembleConfig,
    pub completed: Vec<ReplicaOutcome>,
}

impl EnsembleCheckpoint {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("partial");
        serde_json::to_writer(std::io::BufWriter::new(std::fs::File::create(&tmp)?), self)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }
}

/// Runs `config` in chunks of `chunk` replicas, saving progress to
/// `checkpoint` after each chunk and resuming from it if it already exists.
/// Results are identical to [`run_ensemble`].
pub fn run_ensemble_resumable(config: &EnsembleConfig, checkpoint: &Path, chunk: u64) -> Result<EnsembleResult> {
    config.validate()?;
    let chunk = chunk.max(1);
    let mut state = if checkpoint.exists() {
        let loaded = EnsembleCheckpoint::load(checkpoint)?;
        if loaded.config != *config {
            return Err(Error::InvalidArgument(format!(
                "checkpoint {} was written for a different configuration",
                checkpoint.display()
            )));
        }
        loaded
    } else {
        EnsembleCheckpoint {
            config: config.clone(),
            completed: Vec::new(),
        }
    };
    while (state.completed.len() as u64) < config.replicas {
        let start = state.completed.len() as u64;
        let end = (start + chunk).min(config.replicas);
        state.completed.extend(run_replicas(config, start..end)?);
        state.save(checkpoint)?;
    }
    EnsembleResult::from_replicas(state.config, state.completed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{run_path_with, PathOptions};

    #[test]
    fn single_replica_reproduces_run_path() {
        let params = ModelParams::new(2, 0.4).unwrap();
        let config = EnsembleConfig::new(params, 3000, 1, 99).tracking(Tracking::Martingale);
        let ens = run_ensemble(&config).unwrap();
        let path = run_path_with(&params, PathOptions::new(3000, config.replica_seed(0), 3000), |_| {}).unwrap();
        assert_eq!(ens.replicas[0].terminal_position, path.terminal.position);
        assert_eq!(ens.replicas[0].terminal_center, path.terminal.center);
    }

    #[test]
    fn parallelism_does_not_change_results() {
        let params = ModelParams::new(1, 0.6).unwrap();
        let base = EnsembleConfig::new(params, 500, 64, 5).checkpoints(vec![10, 100]);
        let serial = run_ensemble(&base).unwrap();
        let parallel = run_ensemble(&base.clone().parallelism(8)).unwrap();
        assert_eq!(serial.replicas, parallel.replicas);
        assert_eq!(serial.aggregate.covariance, parallel.aggregate.covariance);
    }

    #[test]
    fn growing_replica_count_keeps_existing_seeds() {
        let params = ModelParams::new(1, 0.5).unwrap();
        let small = run_ensemble(&EnsembleConfig::new(params, 100, 5, 1)).unwrap();
        let large = run_ensemble(&EnsembleConfig::new(params, 100, 9, 1)).unwrap();
        assert_eq!(small.replicas[..], large.replicas[..5]);
    }

    #[test]
    fn residuals_reported_when_tracking() {
        let params = ModelParams::new(2, 0.5).unwrap();
        let ens = run_ensemble(&EnsembleConfig::new(params, 2000, 8, 3).tracking(Tracking::Martingale)).unwrap();
        assert!(ens.aggregate.residual_max.unwrap() < 1e-9);
        let lean = run_ensemble(&EnsembleConfig::new(params, 2000, 8, 3)).unwrap();
        assert!(lean.aggregate.residual_max.is_none());
        assert_eq!(lean.replicas[3].terminal_center, ens.replicas[3].terminal_center);
    }

    #[test]
    fn resumable_run_matches_direct_run() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ens.json");
        let params = ModelParams::new(2, 0.3).unwrap();
        let config = EnsembleConfig::new(params, 300, 25, 8);
        // Simulate an interrupted run that finished the first 10 replicas.
        EnsembleCheckpoint {
            config: config.clone(),
            completed: run_replicas(&config, 0..10).unwrap(),
        }
        .save(&path)
        .unwrap();
        let resumed = run_ensemble_resumable(&config, &path, 4).unwrap();
        assert_eq!(resumed, run_ensemble(&config).unwrap());

        let other = EnsembleConfig::new(params, 301, 25, 8);
        assert!(run_ensemble_resumable(&other, &path, 4).is_err());
    }

    #[test]
    fn invalid_configs_rejected() {
        let params = ModelParams::new(1, 0.5).unwrap();
        assert!(run_ensemble(&EnsembleConfig::new(params, 0, 1, 0)).is_err());
        assert!(run_ensemble(&EnsembleConfig::new(params, 10, 0, 0)).is_err());
        assert!(run_ensemble(&EnsembleConfig::new(params, 10, 1, 0).checkpoints(vec![10])).is_err());
        assert!(run_ensemble(&EnsembleConfig::new(params, 10, 1, 0).parallelism(0)).is_err());
    }
}
