// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

//! Simulation and limit-theorem diagnostics for the center of mass of the
//! multidimensional elephant random walk.
//!
//! At each step the walker picks a uniformly random past step and repeats it
//! with probability `p`, or moves in one of the other `2d − 1` directions. The
//! center of mass `G_n = (1/n) Σ_{k≤n} S_k` is diffusive, critical or
//! superdiffusive depending on `a = (2dp − 1)/(2d − 1)`.

pub mod error;
pub mod geometry;
pub mod limits;
pub mod martingale;
pub mod montecarlo;
pub mod numeric;
pub mod rng;
pub mod trajectory;
pub mod walk;

pub use error::{Error, Result};
pub use geometry::{convex_hull_2d, Hull2D, Point};
pub use limits::{limit_constants, LilConstant, LilKind, LimitConstants};
pub use martingale::{h1_diagnostic, H1Diagnostic, MartingaleTrack};
pub use trajectory::{run_path, run_path_with, PathOptions, Snapshot, Trajectory};
pub use walk::{ModelParams, Regime, Tracking, WalkState};
