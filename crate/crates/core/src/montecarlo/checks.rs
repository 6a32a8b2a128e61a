// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

//! Statistical witnesses of the limit theorems.
//!
//! The `*_report` functions are pure functions of stored ensembles or path
//! functionals, so any check can be replayed from serialized runs. The
//! `*_check` functions run the required simulation first.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::{limit_constants, LilConstant};
use crate::rng::stable_hash;
use crate::walk::{ModelParams, Regime, Tracking};

use super::ensemble::{clt_scale, run_ensemble, EnsembleConfig, EnsembleResult};
use super::functionals::{path_functionals, PathFunctionals};
use super::stats::{ks_test, mean_and_covariance, normal_cdf, quantile, KsResult};

fn require_regime(params: &ModelParams, allowed: &[Regime], quantity: &'static str) -> Result<()> {
    let regime = params.regime();
    if allowed.contains(&regime) {
        Ok(())
    } else {
        Err(Error::NotInRegime { quantity, regime })
    }
}

fn run_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if workers <= 1 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Resource(e.to_string()))?;
    Ok(pool.install(job))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub regime: Regime,
    pub n: u64,
    pub replicas: u64,
    /// `√n` or `√(n log n)`.
    pub scale: f64,
    pub empirical_mean: DVector<f64>,
    pub empirical_cov: DMatrix<f64>,
    pub theoretical_var: f64,
    pub theoretical_cov: DMatrix<f64>,
    /// Largest relative deviation of a diagonal entry from the limit variance.
    pub max_rel_dev: f64,
    pub max_offdiag_abs: f64,
    /// Largest `|mean_i| / SE_i` over coordinates.
    pub max_mean_z: f64,
    pub normality: Vec<KsResult>,
}

/// Compares the normalized terminal center of mass with its Gaussian limit.
pub fn clt_check(ensemble: &EnsembleResult) -> Result<CltReport> {
    let params = &ensemble.config.params;
    require_regime(params, &[Regime::Diffusive, Regime::Critical], "central limit theorem")?;
    let n = ensemble.config.n;
    let scale = clt_scale(params.regime(), n).ok_or(Error::HorizonTooSmall {
        what: "critical central limit normalizer",
        min: 2,
        n,
    })?;
    let d = params.dim();
    let var = limit_constants(params)?.clt_var()?;
    let scaled: Vec<Vec<f64>> = ensemble
        .terminal_centers()
        .map(|g| g.iter().map(|x| x / scale).collect())
        .collect();
    let (mean, cov) = mean_and_covariance(d, scaled.iter().map(Vec::as_slice));
    let r = scaled.len() as f64;
    let mut max_rel_dev = 0.0f64;
    let mut max_offdiag_abs = 0.0f64;
    let mut max_mean_z = 0.0f64;
    for i in 0..d {
        max_rel_dev = max_rel_dev.max((cov[(i, i)] - var).abs() / var);
        max_mean_z = max_mean_z.max(mean[i].abs() / (cov[(i, i)] / r).sqrt());
        for j in 0..i {
            max_offdiag_abs = max_offdiag_abs.max(cov[(i, j)].abs());
        }
    }
    let normality = (0..d)
        .map(|i| {
            let xs: Vec<f64> = scaled.iter().map(|g| g[i]).collect();
            ks_test(&xs, |x| normal_cdf(x, var))
        })
        .collect();
    Ok(CltReport {
        regime: params.regime(),
        n,
        replicas: ensemble.config.replicas,
        scale,
        empirical_mean: mean,
        empirical_cov: cov,
        theoretical_var: var,
        theoretical_cov: DMatrix::identity(d, d) * var,
        max_rel_dev,
        max_offdiag_abs,
        max_mean_z,
        normality,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperdiffusiveReport {
    pub n: u64,
    pub replicas: u64,
    /// Ensemble mean of `Ĝ = G_n / n^a`.
    pub mean_g_hat: DVector<f64>,
    pub mean_std_error: DVector<f64>,
    /// Per-coordinate `E[Ĝ_i²]`.
    pub second_moment: DVector<f64>,
    pub theoretical_second_moment: f64,
    /// `(m, E‖G_m/m^a − Ĝ‖²)` over the checkpoints.
    pub ms_curve: Vec<(u64, f64)>,
}

impl SuperdiffusiveReport {
    pub fn ms_curve_decreasing(&self) -> bool {
        self.ms_curve.windows(2).all(|w| w[1].1 < w[0].1)
    }

    pub fn max_second_moment_rel_dev(&self) -> f64 {
        let t = self.theoretical_second_moment;
        self.second_moment.iter().fold(0.0, |m, v| m.max((v - t).abs() / t))
    }

    pub fn max_mean_z(&self) -> f64 {
        self.mean_g_hat
            .iter()
            .zip(self.mean_std_error.iter())
            .fold(0.0, |m, (x, se)| m.max(x.abs() / se))
    }
}

/// Summarizes the rescaled terminal center of mass of a superdiffusive ensemble.
pub fn superdiffusive_report(ensemble: &EnsembleResult) -> Result<SuperdiffusiveReport> {
    let params = &ensemble.config.params;
    require_regime(params, &[Regime::Superdiffusive], "superdiffusive limit")?;
    let target = limit_constants(params)?.super_cov_coeff()?;
    let a = params.a();
    let d = params.dim();
    let n = ensemble.config.n;
    let g_hat: Vec<Vec<f64>> = ensemble
        .terminal_centers()
        .map(|g| {
            let s = (n as f64).powf(-a);
            g.iter().map(|x| x * s).collect()
        })
        .collect();
    let r = g_hat.len() as f64;
    let (mean, cov) = mean_and_covariance(d, g_hat.iter().map(Vec::as_slice));
    let mean_std_error = DVector::from_fn(d, |i, _| (cov[(i, i)] / r).sqrt());
    let second_moment = DVector::from_fn(d, |i, _| g_hat.iter().map(|g| g[i] * g[i]).sum::<f64>() / r);
    let ms_curve = ensemble
        .config
        .checkpoints
        .iter()
        .enumerate()
        .map(|(c, &m)| {
            let s = (m as f64).powf(-a);
            let total: f64 = ensemble
                .replicas
                .iter()
                .zip(&g_hat)
                .map(|(rep, gh)| {
                    rep.checkpoint_centers[c]
                        .iter()
                        .zip(gh)
                        .map(|(x, y)| (x * s - y).powi(2))
                        .sum::<f64>()
                })
                .sum();
            (m, total / r)
        })
        .chain(std::iter::once((n, 0.0)))
        .collect();
    Ok(SuperdiffusiveReport {
        n,
        replicas: ensemble.config.replicas,
        mean_g_hat: mean,
        mean_std_error,
        second_moment,
        theoretical_second_moment: target,
        ms_curve,
    })
}

/// Runs a superdiffusive ensemble with geometric checkpoints below `n` and summarizes it.
pub fn superdiffusive_check(
    params: &ModelParams,
    n: u64,
    replicas: u64,
    base_seed: u64,
    parallelism: usize,
) -> Result<SuperdiffusiveReport> {
    require_regime(params, &[Regime::Superdiffusive], "superdiffusive limit")?;
    limit_constants(params)?;
    let config = EnsembleConfig::new(*params, n, replicas, base_seed)
        .parallelism(parallelism)
        .checkpoints(geometric_checkpoints(n));
    superdiffusive_report(&run_ensemble(&config)?)
}

/// Powers of ten strictly between 100 and `n`.
pub fn geometric_checkpoints(n: u64) -> Vec<u64> {
    std::iter::successors(Some(1_000u64), |m| m.checked_mul(10))
        .take_while(|&m| m < n)
        .collect()
}

/// Normalization applied to `‖G_n‖` by the strong-law decay table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "exponent")]
pub enum SllnNormalizer {
    /// `‖G_n‖ / n`.
    Linear,
    /// `‖G_n‖ / n^α`.
    Power(f64),
    /// `‖G_n‖ / (√n log n)`.
    CriticalLog,
}

impl SllnNormalizer {
    pub fn for_regime(regime: Regime) -> Self {
        match regime {
            Regime::Critical => Self::CriticalLog,
            _ => Self::Linear,
        }
    }

    pub fn scale(&self, n: u64) -> f64 {
        let nf = n as f64;
        match *self {
            Self::Linear => nf,
            Self::Power(alpha) => nf.powf(alpha),
            Self::CriticalLog => nf.sqrt() * nf.ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SllnRow {
    pub n: u64,
    /// Ensemble 99th percentile of the normalized `‖G_n‖`.
    pub p99: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SllnReport {
    pub normalizer: SllnNormalizer,
    pub rows: Vec<SllnRow>,
}

impl SllnReport {
    pub fn decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].p99 < w[0].p99)
    }
}

/// Decay table over the ensemble's checkpoints and horizon.
pub fn slln_report(ensemble: &EnsembleResult, normalizer: SllnNormalizer) -> SllnReport {
    let norm = |g: &[f64]| g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut rows: Vec<SllnRow> = ensemble
        .config
        .checkpoints
        .iter()
        .enumerate()
        .map(|(c, &m)| {
            let xs: Vec<f64> = ensemble
                .replicas
                .iter()
                .map(|r| norm(&r.checkpoint_centers[c]) / normalizer.scale(m))
                .collect();
            SllnRow {
                n: m,
                p99: quantile(&xs, 0.99),
            }
        })
        .collect();
    let n = ensemble.config.n;
    let xs: Vec<f64> = ensemble.terminal_centers().map(|g| norm(g) / normalizer.scale(n)).collect();
    rows.push(SllnRow {
        n,
        p99: quantile(&xs, 0.99),
    });
    SllnReport { normalizer, rows }
}

pub fn slln_check(
    params: &ModelParams,
    horizons: &[u64],
    replicas: u64,
    base_seed: u64,
    parallelism: usize,
    normalizer: SllnNormalizer,
) -> Result<SllnReport> {
    let mut horizons = horizons.to_vec();
    horizons.sort_unstable();
    horizons.dedup();
    let n = horizons
        .pop()
        .ok_or_else(|| Error::InvalidArgument("slln_check needs at least one horizon".into()))?;
    let config = EnsembleConfig::new(*params, n, replicas, base_seed)
        .parallelism(parallelism)
        .checkpoints(horizons);
    Ok(slln_report(&run_ensemble(&config)?, normalizer))
}

/// Functionals of independent lean paths, path `r` seeded by `stable_hash(base_seed, r)`.
pub fn path_functional_ensemble(
    params: &ModelParams,
    n: u64,
    paths: u64,
    base_seed: u64,
    parallelism: usize,
    checkpoints: &[u64],
) -> Result<Vec<PathFunctionals>> {
    let job = |r: u64| path_functionals(params, n, stable_hash(base_seed, r), checkpoints.to_vec());
    run_pool(parallelism, || (0..paths).into_par_iter().map(job).collect::<Result<Vec<_>>>())?
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QslReport {
    pub target: f64,
    pub n: u64,
    pub early_n: u64,
    /// Per-path trace functional at the horizon.
    pub traces: Vec<f64>,
    pub mean_trace: f64,
    pub early_mean_trace: f64,
}

impl QslReport {
    pub fn rel_dev(&self) -> f64 {
        (self.mean_trace - self.target).abs() / self.target
    }

    /// True if the ensemble average is closer to the target at the horizon than at `early_n`.
    pub fn closer_at_horizon(&self) -> bool {
        (self.mean_trace - self.target).abs() < (self.early_mean_trace - self.target).abs()
    }
}

/// Ensemble-averaged quadratic strong law trace at `early_n` and `n`.
pub fn qsl_report(params: &ModelParams, functionals: &[PathFunctionals], early_n: u64) -> Result<QslReport> {
    require_regime(params, &[Regime::Diffusive, Regime::Critical], "quadratic strong law")?;
    let target = limit_constants(params)?.qsl_trace()?;
    let n = functionals
        .first()
        .ok_or_else(|| Error::InvalidArgument("no paths".into()))?
        .n;
    let early = functionals
        .iter()
        .map(|f| {
            f.checkpoints
                .iter()
                .find(|c| c.n == early_n)
                .map(|c| c.qsl_trace)
                .ok_or_else(|| Error::InvalidArgument(format!("path functionals lack a checkpoint at {early_n}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let traces: Vec<f64> = functionals.iter().map(|f| f.qsl_trace_running).collect();
    let k = traces.len() as f64;
    Ok(QslReport {
        target,
        n,
        early_n,
        mean_trace: traces.iter().sum::<f64>() / k,
        early_mean_trace: early.iter().sum::<f64>() / k,
        traces,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LilReport {
    pub constant: LilConstant,
    pub slack: f64,
    pub n: u64,
    pub running_max: Vec<f64>,
    pub within: u64,
    /// True if the critical triple logarithm was clamped on some path.
    pub normalizer_below_one: bool,
}

impl LilReport {
    pub fn fraction_within(&self) -> f64 {
        self.within as f64 / self.running_max.len() as f64
    }
}

/// Counts paths whose running maximum stays below `slack` times the constant.
pub fn lil_report(params: &ModelParams, functionals: &[PathFunctionals], slack: f64) -> Result<LilReport> {
    require_regime(params, &[Regime::Diffusive, Regime::Critical], "law of the iterated logarithm")?;
    let constant = limit_constants(params)?.lil()?;
    let running_max: Vec<f64> = functionals.iter().map(|f| f.lil_running_max).collect();
    let within = running_max.iter().filter(|&&m| m <= slack * constant.value).count() as u64;
    Ok(LilReport {
        constant,
        slack,
        n: functionals.first().map_or(0, |f| f.n),
        running_max,
        within,
        normalizer_below_one: functionals.iter().any(|f| f.lil_normalizer_below_one),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H1Report {
    pub n: u64,
    pub deviations: Vec<f64>,
}

impl H1Report {
    pub fn count_below(&self, threshold: f64) -> usize {
        self.deviations.iter().filter(|&&d| d < threshold).count()
    }
}

/// Terminal deviation of the normalized quadratic variation on independent paths.
pub fn h1_check(params: &ModelParams, n: u64, seeds: u64, base_seed: u64, parallelism: usize) -> Result<H1Report> {
    require_regime(params, &[Regime::Diffusive, Regime::Critical], "quadratic variation limit")?;
    let config = EnsembleConfig::new(*params, n, seeds, base_seed)
        .parallelism(parallelism)
        .tracking(Tracking::QuadraticVariation);
    let ens = run_ensemble(&config)?;
    let deviations = ens
        .replicas
        .iter()
        .map(|r| r.h1_deviation.ok_or(Error::TrackingDisabled("h1 deviation missing")))
        .collect::<Result<Vec<_>>>()?;
    Ok(H1Report { n, deviations })
}
