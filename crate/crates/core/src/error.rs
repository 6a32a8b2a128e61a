// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

use crate::walk::Regime;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("memory parameter p = {0} is outside [0, 1]")]
    MemoryOutOfRange(f64),

    #[error("invalid memory ratio {num}/{den}")]
    InvalidRatio { num: u64, den: u64 },

    #[error("the gain sequence needs a > -1, got a = {0}")]
    GainDomain(f64),

    #[error("{what} needs n >= {min}, got n = {n}")]
    HorizonTooSmall { what: &'static str, min: u64, n: u64 },

    #[error("{quantity} is not defined in the {regime} regime")]
    NotInRegime {
        quantity: &'static str,
        regime: Regime,
    },

    #[error("a = {a} is too close to the pole at a = 1/2")]
    NearCriticalPole { a: f64 },

    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),

    #[error("convex hull of an empty point set")]
    EmptyPointSet,

    #[error("{0} requires martingale tracking to be enabled")]
    TrackingDisabled(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("worker pool: {0}")]
    Resource(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("tolerance file: {0}")]
    Toml(#[from] toml::de::Error),
}
