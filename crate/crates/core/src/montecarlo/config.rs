// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance tolerances and run sizes for the verification suite.
//!
//! Both can be overridden from a TOML file with optional `[tolerances]` and
//! `[plan]` tables; missing keys keep their defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative band for the diffusive CLT variance.
    pub clt_rel_diffusive: f64,
    /// Relative band for the critical CLT variance.
    pub clt_rel_critical: f64,
    /// Absolute band for off-diagonal CLT covariances.
    pub clt_offdiag_abs: f64,
    /// Level of the per-coordinate empirical-CDF normality test (reported only).
    pub ks_level: f64,
    /// Relative band for the superdiffusive second moment.
    pub super_second_moment_rel: f64,
    /// Means must lie within this many standard errors of their target.
    pub mean_std_errors: f64,
    /// Relative band for the quadratic strong law trace functional.
    pub qsl_rel: f64,
    /// Slack on the diffusive iterated-logarithm bound.
    pub lil_slack: f64,
    /// Fraction of paths that must stay under the slackened diffusive bound.
    pub lil_min_fraction: f64,
    /// Slack on the critical iterated-logarithm constant.
    pub critical_lil_slack: f64,
    /// Largest entry deviation of the normalized quadratic variation from its limit.
    pub h1_max_deviation: f64,
    /// Fraction of seeds that must meet `h1_max_deviation`.
    pub h1_min_fraction: f64,
    /// Absolute bound on the center-of-mass decomposition residual.
    pub residual_abs: f64,
    /// Relative bound on the gap between the two forms of `M_n`.
    pub representation_rel: f64,
    /// Absolute bound on the Gamma asymptotics at the check horizon.
    pub asymptotics_abs: f64,
    /// Relative band for `log det` growth.
    pub log_det_rel: f64,
    /// Fourth-moment estimates may exceed 4/3 by this many standard errors.
    pub fourth_moment_std_errors: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            clt_rel_diffusive: 0.05,
            clt_rel_critical: 0.08,
            clt_offdiag_abs: 0.02,
            ks_level: 0.01,
            super_second_moment_rel: 0.10,
            mean_std_errors: 4.0,
            qsl_rel: 0.25,
            lil_slack: 1.10,
            lil_min_fraction: 0.95,
            critical_lil_slack: 1.5,
            h1_max_deviation: 0.05,
            h1_min_fraction: 0.9,
            residual_abs: 1e-9,
            representation_rel: 1e-9,
            asymptotics_abs: 1e-3,
            log_det_rel: 0.02,
            fourth_moment_std_errors: 4.0,
        }
    }
}

/// Sample sizes used by the verification suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyPlan {
    pub seed: u64,
    pub parallelism: usize,
    pub clt_steps_diffusive: u64,
    pub clt_steps_critical: u64,
    pub clt_replicas: u64,
    pub super_steps: u64,
    pub super_replicas: u64,
    pub qsl_steps: u64,
    pub qsl_early_steps: u64,
    pub qsl_paths: u64,
    pub lil_steps: u64,
    pub lil_paths: u64,
    pub h1_steps: u64,
    pub h1_seeds: u64,
    pub slln_horizons: Vec<u64>,
    pub slln_replicas: u64,
    pub fourth_moment_histories: u64,
    pub fourth_moment_resamples: u64,
    pub identity_steps: u64,
}

impl Default for VerifyPlan {
    fn default() -> Self {
        Self {
            seed: 0x00C0_FFEE,
            parallelism: default_parallelism(),
            clt_steps_diffusive: 10_000,
            clt_steps_critical: 100_000,
            clt_replicas: 100_000,
            super_steps: 100_000,
            super_replicas: 10_000,
            qsl_steps: 1_000_000,
            qsl_early_steps: 10_000,
            qsl_paths: 20,
            lil_steps: 1_000_000,
            lil_paths: 100,
            h1_steps: 1_000_000,
            h1_seeds: 20,
            slln_horizons: vec![1_000, 10_000, 100_000, 1_000_000],
            slln_replicas: 200,
            fourth_moment_histories: 100,
            fourth_moment_resamples: 100_000,
            identity_steps: 100_000,
        }
    }
}

/// Environment variable that overrides the default worker count.
pub const PARALLELISM_ENV: &str = "CMERW_PARALLELISM";

pub fn default_parallelism() -> usize {
    std::env::var(PARALLELISM_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub tolerances: Tolerances,
    pub plan: VerifyPlan,
}

impl VerifyConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}
