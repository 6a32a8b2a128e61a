// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

//! Seeded ensembles, path functionals and the verification suite.

pub mod checks;
pub mod config;
pub mod ensemble;
pub mod functionals;
pub mod stats;
pub mod verify;

pub use checks::{
    clt_check, h1_check, lil_report, path_functional_ensemble, qsl_report, slln_check, slln_report,
    superdiffusive_check, superdiffusive_report, CltReport, H1Report, LilReport, QslReport, SllnNormalizer,
    SllnReport, SuperdiffusiveReport,
};
pub use config::{Tolerances, VerifyConfig, VerifyPlan, PARALLELISM_ENV};
pub use ensemble::{run_ensemble, run_ensemble_resumable, EnsembleConfig, EnsembleResult, ReplicaOutcome};
pub use functionals::{lil_statistic, path_functionals, qsl_functional, PathFunctionals};
pub use verify::{run_verification, CheckResult, VerificationReport};
