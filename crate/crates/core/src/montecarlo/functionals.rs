// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

//! Path functionals for the almost-sure limit theorems.
//!
//! Both functionals are accumulated online from the sequence `(k, G_k)`, so a
//! long path never has to be stored:
//!
//! * the quadratic strong law average `(1/log n) Σ_{k≥1} G_kG_kᵀ/k²`, or
//!   `(1/log log n) Σ_{k≥2} G_kG_kᵀ/(k log k)²` at the critical point;
//! * the running maximum of `‖G_k‖²/(2k log log k)`, or
//!   `‖G_k‖²/(2k log k log log log k)` at the critical point, over `k ≥ 16`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;
use crate::walk::{ModelParams, Regime, Tracking, WalkState};

/// First time at which the iterated-logarithm statistic is evaluated.
pub const LIL_THRESHOLD: u64 = 16;

/// Smallest horizon at which the quadratic strong law average is reported.
pub const QSL_MIN_HORIZON: u64 = 10;

/// Running `Σ w_k G_kG_kᵀ` with the regime's weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QslAccumulator {
    critical: bool,
    sum: DMatrix<f64>,
    n: u64,
}

impl QslAccumulator {
    pub fn new(d: usize, regime: Regime) -> Self {
        Self {
            critical: regime == Regime::Critical,
            sum: DMatrix::zeros(d, d),
            n: 0,
        }
    }

    /// Adds `G_k`. Times must be pushed in increasing order.
    pub fn push(&mut self, k: u64, g: &[f64]) {
        self.n = k;
        let kf = k as f64;
        let w = if self.critical {
            if k < 2 {
                return;
            }
            let l = kf * kf.ln();
            1.0 / (l * l)
        } else {
            1.0 / (kf * kf)
        };
        let d = g.len();
        for i in 0..d {
            for j in 0..=i {
                self.sum[(i, j)] += w * g[i] * g[j];
            }
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// The averaged matrix at the last pushed time.
    pub fn matrix(&self) -> Result<DMatrix<f64>> {
        if self.n < QSL_MIN_HORIZON {
            return Err(Error::HorizonTooSmall {
                what: "quadratic strong law functional",
                min: QSL_MIN_HORIZON,
                n: self.n,
            });
        }
        let nf = self.n as f64;
        let norm = if self.critical { nf.ln().ln() } else { nf.ln() };
        let mut m = self.sum.clone() / norm;
        m.fill_upper_triangle_with_lower_triangle();
        Ok(m)
    }

    pub fn trace(&self) -> Result<f64> {
        Ok(self.matrix()?.trace())
    }
}

/// Running maximum of the normalized iterated-logarithm statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LilTracker {
    critical: bool,
    running_max: f64,
    normalizer_below_one: bool,
}

impl LilTracker {
    pub fn new(regime: Regime) -> Self {
        Self {
            critical: regime == Regime::Critical,
            running_max: 0.0,
            normalizer_below_one: false,
        }
    }

    /// The statistic at time `k`, or `None` below [`LIL_THRESHOLD`].
    ///
    /// At the critical point `log log log k` is replaced by `max(1, ·)`; the
    /// second component reports whether that clamp was active.
    pub fn statistic(critical: bool, k: u64, g: &[f64]) -> Option<(f64, bool)> {
        if k < LIL_THRESHOLD {
            return None;
        }
        let kf = k as f64;
        let norm2: f64 = g.iter().map(|x| x * x).sum();
        let lk = kf.ln();
        if critical {
            let lll = lk.ln().ln();
            let clamped = lll < 1.0;
            Some((norm2 / (2.0 * kf * lk * lll.max(1.0)), clamped))
        } else {
            Some((norm2 / (2.0 * kf * lk.ln()), false))
        }
    }

    pub fn push(&mut self, k: u64, g: &[f64]) {
        if let Some((value, clamped)) = Self::statistic(self.critical, k, g) {
            self.running_max = self.running_max.max(value);
            self.normalizer_below_one |= clamped;
        }
    }

    pub fn running_max(&self) -> f64 {
        self.running_max
    }

    /// True if the triple logarithm was below one at some evaluated time.
    pub fn normalizer_below_one(&self) -> bool {
        self.normalizer_below_one
    }
}

/// Functional values captured at an intermediate time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalCheckpoint {
    pub n: u64,
    pub qsl_trace: f64,
    pub lil_running_max: f64,
    /// `G_n / n^a`.
    pub scaled_center: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFunctionals {
    pub n: u64,
    pub qsl_running: DMatrix<f64>,
    pub qsl_trace_running: f64,
    pub lil_running_max: f64,
    pub lil_normalizer_below_one: bool,
    /// `G_n / n^a` at the horizon.
    pub super_g_hat: Vec<f64>,
    /// `(m, ‖G_m/m^a − G_n/n^a‖²)` over the checkpoints.
    pub ms_curve: Vec<(u64, f64)>,
    pub checkpoints: Vec<FunctionalCheckpoint>,
}

/// Online accumulator for [`PathFunctionals`].
#[derive(Debug, Clone)]
pub struct FunctionalTracker {
    a: f64,
    qsl: QslAccumulator,
    lil: LilTracker,
    checkpoints: Vec<u64>,
    captured: Vec<FunctionalCheckpoint>,
    last: Vec<f64>,
}

impl FunctionalTracker {
    /// `checkpoints` are the times at which intermediate values are kept.
    pub fn new(params: &ModelParams, mut checkpoints: Vec<u64>) -> Self {
        checkpoints.sort_unstable();
        checkpoints.dedup();
        checkpoints.reverse();
        Self {
            a: params.a(),
            qsl: QslAccumulator::new(params.dim(), params.regime()),
            lil: LilTracker::new(params.regime()),
            checkpoints,
            captured: Vec::new(),
            last: vec![0.0; params.dim()],
        }
    }

    fn scaled(&self, k: u64, g: &[f64]) -> Vec<f64> {
        let s = (k as f64).powf(-self.a);
        g.iter().map(|x| x * s).collect()
    }

    /// Adds `G_k`; times must be consecutive for the sums to be the path functionals.
    pub fn push(&mut self, k: u64, g: &[f64]) {
        self.qsl.push(k, g);
        self.lil.push(k, g);
        self.last.copy_from_slice(g);
        if self.checkpoints.last() == Some(&k) {
            self.checkpoints.pop();
            self.captured.push(FunctionalCheckpoint {
                n: k,
                qsl_trace: self.qsl.trace().unwrap_or(f64::NAN),
                lil_running_max: self.lil.running_max(),
                scaled_center: self.scaled(k, g),
            });
        }
    }

    pub fn observe(&mut self, state: &WalkState) {
        self.push(state.n(), &state.center_of_mass());
    }

    pub fn finish(self) -> Result<PathFunctionals> {
        let n = self.qsl.n();
        let qsl_running = self.qsl.matrix()?;
        let super_g_hat = self.scaled(n, &self.last);
        let ms_curve = self
            .captured
            .iter()
            .filter(|c| c.n < n)
            .map(|c| {
                let dev: f64 = c.scaled_center.iter().zip(&super_g_hat).map(|(x, y)| (x - y) * (x - y)).sum();
                (c.n, dev)
            })
            .collect();
        Ok(PathFunctionals {
            n,
            qsl_trace_running: qsl_running.trace(),
            qsl_running,
            lil_running_max: self.lil.running_max(),
            lil_normalizer_below_one: self.lil.normalizer_below_one(),
            super_g_hat,
            ms_curve,
            checkpoints: self.captured,
        })
    }
}

/// Runs a lean path of `n` steps and accumulates its functionals online.
pub fn path_functionals(params: &ModelParams, n: u64, seed: u64, checkpoints: Vec<u64>) -> Result<PathFunctionals> {
    let mut tracker = FunctionalTracker::new(params, checkpoints);
    let mut state = WalkState::new(*params, seed, Tracking::Position)?;
    let d = params.dim();
    let mut g = vec![0.0; d];
    for _ in 0..n {
        state.step();
        let k = state.n();
        let inv = 1.0 / k as f64;
        for (gi, &si) in g.iter_mut().zip(state.position_sum()) {
            *gi = si as f64 * inv;
        }
        tracker.push(k, &g);
    }
    tracker.finish()
}

fn full_resolution(path: &Trajectory) -> Result<()> {
    if path.options.record_every != 1 {
        return Err(Error::InvalidArgument(
            "path functionals need a path recorded at every step".into(),
        ));
    }
    Ok(())
}

/// Quadratic strong law functional of a path recorded at every step.
pub fn qsl_functional(path: &Trajectory) -> Result<QslAccumulator> {
    full_resolution(path)?;
    let mut acc = QslAccumulator::new(path.params.dim(), path.params.regime());
    for s in &path.snapshots {
        acc.push(s.n, &s.center);
    }
    acc.matrix()?;
    Ok(acc)
}

/// Iterated-logarithm running maximum of a path recorded at every step.
pub fn lil_statistic(path: &Trajectory) -> Result<LilTracker> {
    full_resolution(path)?;
    if path.terminal.n < LIL_THRESHOLD {
        return Err(Error::HorizonTooSmall {
            what: "iterated-logarithm statistic",
            min: LIL_THRESHOLD,
            n: path.terminal.n,
        });
    }
    let mut lil = LilTracker::new(path.params.regime());
    for s in &path.snapshots {
        lil.push(s.n, &s.center);
    }
    Ok(lil)
}
