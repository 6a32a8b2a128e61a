// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Usage and configuration errors; all map to exit status 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] cmerw_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
