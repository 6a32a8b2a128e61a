// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use cmerw_core::montecarlo::config::PARALLELISM_ENV;

#[derive(Debug, Parser)]
#[command(name = "cmerw", version, about = "Center of mass of the elephant random walk")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one path and write its trajectory.
    Simulate(SimulateArgs),
    /// Run independent replicas and write their terminal values.
    Ensemble(EnsembleArgs),
    /// Run the verification suite for the regime of (d, p), or replay a trajectory.
    Verify(VerifyArgs),
    /// Render a planar path, its center of mass and its convex hull as SVG.
    Figure(FigureArgs),
    /// Print the limit constants for (d, p).
    Limits(LimitsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackingArg {
    Position,
    Martingale,
    QuadraticVariation,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Lattice dimension.
    #[arg(long)]
    pub d: usize,
    /// Memory parameter, as a decimal ("0.625") or an exact ratio ("5/8").
    #[arg(long)]
    pub p: String,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub steps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub record_every: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub steps: u64,
    #[arg(long)]
    pub replicas: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default from the environment, else all cores).
    #[arg(long, env = PARALLELISM_ENV)]
    pub parallelism: Option<usize>,
    #[arg(long, value_enum, default_value = "position")]
    pub tracking: TrackingArg,
    /// Intermediate times at which the center of mass is kept.
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Vec<u64>,
    /// Progress file; an interrupted run resumes from it.
    #[arg(long)]
    pub checkpoint_file: Option<PathBuf>,
    /// Replicas per saved chunk when resuming is enabled.
    #[arg(long, default_value_t = 1000)]
    pub chunk: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Model to verify; not needed with `--trajectory`.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub p: Option<String>,
    /// Horizon of the central limit (or superdiffusive) ensemble.
    #[arg(long)]
    pub steps: Option<u64>,
    /// Replica count of the central limit (or superdiffusive) ensemble.
    #[arg(long)]
    pub replicas: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = PARALLELISM_ENV)]
    pub parallelism: Option<usize>,
    /// TOML file with `[tolerances]` and `[plan]` overrides.
    #[arg(long)]
    pub tolerance_file: Option<PathBuf>,
    /// Replay a trajectory CSV written by `simulate` instead of simulating.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub steps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct LimitsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}
