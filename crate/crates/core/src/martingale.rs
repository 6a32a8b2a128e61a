// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

//! The martingale decomposition of the center of mass.
//!
//! With the gain sequence `a_n = Γ(a+1)Γ(n)/Γ(n+a)` and `b_n = Σ_{k≤n} 1/a_k`,
//! the processes `M_n = Σ a_k ε_k = a_n S_n` and `N_n = Σ a_k b_{k−1} ε_k` are
//! martingales and `G_n = (b_n M_n − N_n)/n`. [`MartingaleTrack`] maintains all
//! of these incrementally along a path; the free functions evaluate the
//! deterministic sequences and the numerical witnesses used by the
//! martingale limit theorems.

use nalgebra::{DMatrix, DVector};
use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{gamma, ln_gamma, ln_gamma_ratio, CompensatedSum, DoubleDouble};
use crate::rng::WalkRng;
use crate::limits::{limit_matrix_v, limit_matrix_w};
use crate::trajectory::{Snapshot, Trajectory};
use crate::walk::{direction, increment_distribution, DirectionCounts, ModelParams, Regime, WalkState};

fn check_gain_domain(a: f64) -> Result<()> {
    if a > -1.0 {
        Ok(())
    } else {
        Err(Error::GainDomain(a))
    }
}

/// `a_n = Γ(a+1)Γ(n)/Γ(n+a)` from the log-Gamma closed form.
pub fn gain_sequence(n: u64, a: f64) -> Result<f64> {
    check_gain_domain(a)?;
    if n == 0 {
        return Err(Error::HorizonTooSmall {
            what: "gain_sequence",
            min: 1,
            n,
        });
    }
    if n == 1 || a == 0.0 {
        return Ok(1.0);
    }
    Ok((ln_gamma(a + 1.0) - ln_gamma_ratio(n as f64, a)).exp())
}

/// Iterator over `a_1, a_2, …` via `a_{n+1} = a_n · n/(n + a)`.
#[derive(Debug, Clone)]
pub struct GainRecurrence {
    a: f64,
    n: u64,
    value: f64,
}

impl GainRecurrence {
    pub fn new(a: f64) -> Result<Self> {
        check_gain_domain(a)?;
        Ok(Self { a, n: 0, value: 1.0 })
    }
}

impl Iterator for GainRecurrence {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        if self.n > 0 {
            let n = self.n as f64;
            self.value *= n / (n + self.a);
        }
        self.n += 1;
        Some(self.value)
    }
}

/// `b_n = Σ_{k=1}^n 1/a_k`, with `b_0 = 0`.
pub fn b_sequence(n: u64, a: f64) -> Result<f64> {
    let sum: CompensatedSum = GainRecurrence::new(a)?
        .take(n as usize)
        .map(|g| 1.0 / g)
        .collect();
    Ok(sum.value())
}

/// `ε_n = S_n − (1 + a/(n − 1)) S_{n−1}` for `n ≥ 2`.
pub fn innovation(prev: &[i64], new: &[i64], n: u64, a: f64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::HorizonTooSmall {
            what: "innovation",
            min: 2,
            n,
        });
    }
    if prev.len() != new.len() {
        return Err(Error::InvalidArgument("position dimensions differ".into()));
    }
    let factor = 1.0 + a / (n - 1) as f64;
    Ok(prev
        .iter()
        .zip(new)
        .map(|(&s0, &s1)| s1 as f64 - factor * s0 as f64)
        .collect())
}

/// `E[ε_{n+1} ε_{n+1}ᵀ | F_n] = (1/d) I + a (Σ_n/n − (1/d) I) − (a/n)² S_n S_nᵀ`,
/// with `Σ_n = Σ_{k≤n} X_k X_kᵀ`. At `n = 0` this is `(1/d) I`.
pub fn conditional_eps_covariance(params: &ModelParams, history: &DirectionCounts) -> DMatrix<f64> {
    let d = params.dim();
    let inv_d = 1.0 / d as f64;
    let n = history.n();
    if n == 0 {
        return DMatrix::from_diagonal_element(d, d, inv_d);
    }
    let a = params.a();
    let nf = n as f64;
    let axis = history.axis_counts();
    let s = history.position();
    let r = a / nf;
    DMatrix::from_fn(d, d, |i, j| {
        let diag = if i == j {
            inv_d + a * (axis[i] as f64 / nf - inv_d)
        } else {
            0.0
        };
        diag - r * r * (s[i] as f64) * (s[j] as f64)
    })
}

/// Running sums of `a_k² C_k ⊗ [[1, b_{k−1}], [b_{k−1}, b_{k−1}²]]`, stored as three `d × d` blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticVariation {
    mm: DMatrix<f64>,
    mn: DMatrix<f64>,
    nn: DMatrix<f64>,
}

impl QuadraticVariation {
    fn zeros(d: usize) -> Self {
        Self {
            mm: DMatrix::zeros(d, d),
            mn: DMatrix::zeros(d, d),
            nn: DMatrix::zeros(d, d),
        }
    }

    /// The `2d × 2d` matrix `⟨𝓜⟩_n` for `𝓜_n = (M_n, N_n)`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let d = self.mm.nrows();
        let mut out = DMatrix::zeros(2 * d, 2 * d);
        out.view_mut((0, 0), (d, d)).copy_from(&self.mm);
        out.view_mut((0, d), (d, d)).copy_from(&self.mn);
        out.view_mut((d, 0), (d, d)).copy_from(&self.mn.transpose());
        out.view_mut((d, d), (d, d)).copy_from(&self.nn);
        out
    }
}

/// Martingale quantities of one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleTrack {
    a: f64,
    n: u64,
    // The gain, b_n, M_n and N_n are kept in double-double: in plain f64 the
    // center of mass rebuilt as (b_n M_n − N_n)/n loses ~1e-8 absolute by
    // n = 10^5 when p is near 1, from cancellation between two ~1e9 terms.
    gain: DoubleDouble,
    b: DoubleDouble,
    b_prev: f64,
    eps: Vec<f64>,
    m: Vec<DoubleDouble>,
    nn: Vec<DoubleDouble>,
    tau: CompensatedSum,
    sum_a2: CompensatedSum,
    sum_a2_b: CompensatedSum,
    sum_a4: CompensatedSum,
    qv: Option<QuadraticVariation>,
}

impl MartingaleTrack {
    pub fn new(d: usize, a: f64, detailed: bool) -> Result<Self> {
        check_gain_domain(a)?;
        Ok(Self {
            a,
            n: 0,
            gain: DoubleDouble::ONE,
            b: DoubleDouble::ZERO,
            b_prev: 0.0,
            eps: vec![0.0; d],
            m: vec![DoubleDouble::ZERO; d],
            nn: vec![DoubleDouble::ZERO; d],
            tau: CompensatedSum::new(),
            sum_a2: CompensatedSum::new(),
            sum_a2_b: CompensatedSum::new(),
            sum_a4: CompensatedSum::new(),
            qv: detailed.then(|| QuadraticVariation::zeros(d)),
        })
    }

    pub fn is_detailed(&self) -> bool {
        self.qv.is_some()
    }

    /// Advances from time `n` to `n + 1`. `prev_position` is `S_n` and
    /// `direction_index` encodes `X_{n+1}`; `cov` is `E[ε_{n+1}ε_{n+1}ᵀ | F_n]`,
    /// required only in detailed mode.
    pub fn update(&mut self, prev_position: &[i64], direction_index: usize, cov: Option<&DMatrix<f64>>) {
        let d = self.eps.len();
        let k = self.n + 1;
        let drift = if k == 1 {
            DoubleDouble::ZERO
        } else {
            let prev = (k - 1) as f64;
            self.gain = (self.gain * prev) / DoubleDouble::sum(prev, self.a);
            DoubleDouble::from(self.a) / prev
        };
        let gain_dd = self.gain;
        let b_prev_dd = self.b;
        self.b += gain_dd.recip();
        let gain = gain_dd.value();
        let b_prev = b_prev_dd.value();
        self.b_prev = b_prev;

        let (axis, sign) = direction(d, direction_index);
        let weight = gain_dd * b_prev_dd;
        for i in 0..d {
            let x = if i == axis { sign as f64 } else { 0.0 };
            let e = DoubleDouble::from(x) - drift * prev_position[i] as f64;
            self.eps[i] = e.value();
            self.m[i] += gain_dd * e;
            self.nn[i] += weight * e;
        }

        let g2 = gain * gain;
        self.sum_a2.add(g2);
        self.sum_a2_b.add(g2 * b_prev);
        self.tau.add(g2 * b_prev * b_prev);
        self.sum_a4.add(g2 * g2);

        if let Some(qv) = self.qv.as_mut() {
            let cov = cov.expect("detailed tracking needs the conditional covariance");
            qv.mm += cov * g2;
            qv.mn += cov * (g2 * b_prev);
            qv.nn += cov * (g2 * b_prev * b_prev);
        }
        self.n = k;
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `a_n`.
    pub fn gain(&self) -> f64 {
        self.gain.value()
    }

    /// `b_n`.
    pub fn b(&self) -> f64 {
        self.b.value()
    }

    /// `b_{n−1}`.
    pub fn b_prev(&self) -> f64 {
        self.b_prev
    }

    /// Latest innovation `ε_n`.
    pub fn innovation(&self) -> &[f64] {
        &self.eps
    }

    /// `M_n = Σ a_k ε_k`.
    pub fn m(&self) -> Vec<f64> {
        self.m.iter().map(|&m| m.value()).collect()
    }

    /// `N_n = Σ a_k b_{k−1} ε_k`.
    pub fn n_martingale(&self) -> Vec<f64> {
        self.nn.iter().map(|&v| v.value()).collect()
    }

    /// `τ_n = Σ a_k² b_{k−1}²`.
    pub fn tau(&self) -> f64 {
        self.tau.value()
    }

    pub fn sum_a2(&self) -> f64 {
        self.sum_a2.value()
    }

    pub fn sum_a2_b(&self) -> f64 {
        self.sum_a2_b.value()
    }

    pub fn sum_a4(&self) -> f64 {
        self.sum_a4.value()
    }

    pub fn quadratic_variation(&self) -> Option<&QuadraticVariation> {
        self.qv.as_ref()
    }

    /// `(b_n M_n − N_n) / n`, the center of mass rebuilt from the martingales.
    pub fn center_of_mass(&self) -> Vec<f64> {
        let n = self.n.max(1) as f64;
        self.m
            .iter()
            .zip(&self.nn)
            .map(|(&m, &nn)| ((self.b * m - nn) / n).value())
            .collect()
    }

    /// Largest relative gap between the additive `Σ a_k ε_k` and the
    /// multiplicative `a_n S_n` forms of `M_n`, relative to `max(1, ‖a_n S_n‖∞)`.
    pub fn representation_gap(&self, position: &[i64]) -> f64 {
        let mult: Vec<DoubleDouble> = position.iter().map(|&s| self.gain * s as f64).collect();
        let scale = mult.iter().fold(1.0_f64, |acc, &x| acc.max(x.value().abs()));
        self.m
            .iter()
            .zip(&mult)
            .map(|(&add, &mul)| (add - mul).value().abs() / scale)
            .fold(0.0, f64::max)
    }
}

/// Diagonal of `V_n = n^{−3/2} diag(b_n, 1) ⊗ I_d`.
pub fn normalizer_v(n: u64, b_n: f64, d: usize) -> Result<DVector<f64>> {
    if n == 0 {
        return Err(Error::HorizonTooSmall {
            what: "normalizer_v",
            min: 1,
            n,
        });
    }
    let scale = 1.0 / (n as f64).powf(1.5);
    Ok(kron_diag(b_n * scale, scale, d))
}

/// Diagonal of `W_n = (n √(n log n))^{−1} diag(b_n, 1) ⊗ I_d`, for `n ≥ 2`.
pub fn normalizer_w(n: u64, b_n: f64, d: usize) -> Result<DVector<f64>> {
    if n < 2 {
        return Err(Error::HorizonTooSmall {
            what: "normalizer_w",
            min: 2,
            n,
        });
    }
    let nf = n as f64;
    let scale = 1.0 / (nf * (nf * nf.ln()).sqrt());
    Ok(kron_diag(b_n * scale, scale, d))
}

fn kron_diag(first: f64, second: f64, d: usize) -> DVector<f64> {
    DVector::from_fn(2 * d, |i, _| if i < d { first } else { second })
}

/// `D Q D` for a diagonal `D` given by its entries.
pub fn normalize_quadratic_variation(qv: &DMatrix<f64>, diag: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(qv.nrows(), qv.ncols(), |i, j| diag[i] * qv[(i, j)] * diag[j])
}

/// `log((det V_n⁻¹)²) / log n`, using `det V_n⁻¹ = (n^{3/2}/b_n)^d`.
///
/// This closed form is the determinant of the `M` block of `V_n⁻¹`; the full
/// `2d × 2d` matrix has determinant `(n³/b_n)^d`. The ratio tends to `d(1 − 2a)`.
pub fn log_det_ratio(n: u64, b_n: f64, d: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::HorizonTooSmall {
            what: "log_det_ratio",
            min: 2,
            n,
        });
    }
    let nf = n as f64;
    Ok(2.0 * d as f64 * (1.5 * nf.ln() - b_n.ln()) / nf.ln())
}

/// Upper bound `16 b_n⁴ Σ_{k≤n} a_k⁴ / (3 ε² n⁶)` on the Lindeberg sum.
pub fn lindeberg_bound(epsilon: f64, track: &MartingaleTrack) -> Result<f64> {
    if epsilon <= 0.0 || epsilon.is_nan() {
        return Err(Error::NonPositiveEpsilon(epsilon));
    }
    let n = track.n();
    if n == 0 {
        return Err(Error::HorizonTooSmall {
            what: "lindeberg_bound",
            min: 1,
            n,
        });
    }
    let nf = n as f64;
    let b = track.b();
    let b2 = b * b;
    // Grouped to keep the n^6 and b^4 factors in range at large n.
    Ok(16.0 / 3.0 * (b2 / (nf * nf * nf)) * (b2 / (nf * nf * nf)) * track.sum_a4() / (epsilon * epsilon))
}

/// `(n^a a_n − Γ(a+1), b_n / n^{a+1} − 1/Γ(a+2))` with `a_n`, `b_n` from the recurrence.
pub fn gamma_asymptotics_check(n: u64, a: f64) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::HorizonTooSmall {
            what: "gamma_asymptotics_check",
            min: 2,
            n,
        });
    }
    let mut b = CompensatedSum::new();
    let mut gain = 1.0;
    for g in GainRecurrence::new(a)?.take(n as usize) {
        b.add(1.0 / g);
        gain = g;
    }
    let nf = n as f64;
    let (gamma_a1, gamma_a2) = if a == 0.0 { (1.0, 1.0) } else { (gamma(a + 1.0), gamma(a + 2.0)) };
    Ok((
        nf.powf(a) * gain - gamma_a1,
        b.value() / nf.powf(a + 1.0) - 1.0 / gamma_a2,
    ))
}

/// A history frozen at time `n`, used to resample the next increment.
#[derive(Debug, Clone)]
pub struct FrozenHistory {
    params: ModelParams,
    counts: DirectionCounts,
    position: Vec<i64>,
    probs: Vec<f64>,
}

impl FrozenHistory {
    pub fn new(params: ModelParams, counts: DirectionCounts) -> Result<Self> {
        if counts.dim() != params.dim() {
            return Err(Error::InvalidArgument("history dimension mismatch".into()));
        }
        if counts.n() == 0 {
            return Err(Error::HorizonTooSmall {
                what: "frozen history",
                min: 1,
                n: 0,
            });
        }
        let probs = increment_distribution(&params, &counts);
        let position = counts.position();
        Ok(Self {
            params,
            counts,
            position,
            probs,
        })
    }

    pub fn from_state(state: &WalkState) -> Result<Self> {
        Self::new(*state.params(), state.counts().clone())
    }

    pub fn n(&self) -> u64 {
        self.counts.n()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// `ε_{n+1}` if the next step has direction index `j`.
    pub fn innovation_for(&self, j: usize) -> Vec<f64> {
        let d = self.params.dim();
        let drift = self.params.a() / self.n() as f64;
        let (axis, sign) = direction(d, j);
        (0..d)
            .map(|i| {
                let x = if i == axis { sign as f64 } else { 0.0 };
                x - drift * self.position[i] as f64
            })
            .collect()
    }

    pub fn sample_direction(&self, rng: &mut WalkRng) -> usize {
        let u: f64 = rng.random();
        crate::walk::sample_direction(&self.params, self.counts.as_slice(), self.n(), u)
    }

    pub fn conditional_covariance(&self) -> DMatrix<f64> {
        conditional_eps_covariance(&self.params, &self.counts)
    }

    /// `E[‖ε_{n+1}‖⁴ | F_n]` summed exactly over the `2d` outcomes.
    pub fn exact_fourth_moment(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(j, &p)| {
                let sq: f64 = self.innovation_for(j).iter().map(|e| e * e).sum();
                p * sq * sq
            })
            .sum()
    }
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl MeanEstimate {
    pub fn from_samples(values: impl IntoIterator<Item = f64>) -> Self {
        let mut count = 0u64;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for x in values {
            count += 1;
            let delta = x - mean;
            mean += delta / count as f64;
            m2 += delta * (x - mean);
        }
        let var = if count > 1 { m2 / (count - 1) as f64 } else { 0.0 };
        Self {
            mean,
            std_error: (var / count.max(1) as f64).sqrt(),
            samples: count,
        }
    }
}

/// Minimum number of resamples accepted by [`eps_fourth_moment_check`].
pub const MIN_FOURTH_MOMENT_RESAMPLES: u64 = 10_000;

/// Monte Carlo estimate of `E[‖ε_{n+1}‖⁴ | F_n]` from `resamples` draws of the next step.
pub fn eps_fourth_moment_check(history: &FrozenHistory, resamples: u64, rng: &mut WalkRng) -> Result<MeanEstimate> {
    if resamples < MIN_FOURTH_MOMENT_RESAMPLES {
        return Err(Error::InvalidArgument(format!(
            "fourth-moment check needs at least {MIN_FOURTH_MOMENT_RESAMPLES} resamples, got {resamples}"
        )));
    }
    let table: Vec<f64> = (0..history.params.directions())
        .map(|j| {
            let sq: f64 = history.innovation_for(j).iter().map(|e| e * e).sum();
            sq * sq
        })
        .collect();
    Ok(MeanEstimate::from_samples(
        (0..resamples).map(|_| table[history.sample_direction(rng)]),
    ))
}

/// Normalized quadratic variation against its almost-sure limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H1Diagnostic {
    /// `(n, V_n⟨M⟩_nV_nᵀ)` at each recorded time (`W_n` in the critical regime).
    pub normalized: Vec<(u64, DMatrix<f64>)>,
    pub limit: DMatrix<f64>,
    /// Largest absolute entry of the terminal normalized matrix minus the limit.
    pub max_deviation: f64,
}

fn regime_limit(params: &ModelParams) -> Result<DMatrix<f64>> {
    let d = params.dim();
    match params.regime() {
        Regime::Diffusive => limit_matrix_v(params.a(), d),
        Regime::Critical => Ok(limit_matrix_w(d)),
        regime => Err(Error::NotInRegime {
            quantity: "quadratic variation limit",
            regime,
        }),
    }
}

fn regime_normalized(params: &ModelParams, n: u64, b_n: f64, qv: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = params.dim();
    let diag = match params.regime() {
        Regime::Critical => normalizer_w(n, b_n, d)?,
        _ => normalizer_v(n, b_n, d)?,
    };
    Ok(normalize_quadratic_variation(qv, &diag))
}

fn max_abs_deviation(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    (x - y).iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Terminal deviation of the normalized `⟨M⟩_n` for a path tracked with
/// [`Tracking::QuadraticVariation`].
pub fn h1_deviation(state: &WalkState) -> Result<f64> {
    let params = state.params();
    let limit = regime_limit(params)?;
    let track = state
        .track()
        .ok_or(Error::TrackingDisabled("h1_deviation needs martingale tracking"))?;
    let qv = track
        .quadratic_variation()
        .ok_or(Error::TrackingDisabled("h1_deviation needs quadratic variation tracking"))?;
    let normalized = regime_normalized(params, track.n(), track.b(), &qv.matrix())?;
    Ok(max_abs_deviation(&normalized, &limit))
}

/// Normalized quadratic variation along a recorded path. Refuses the
/// superdiffusive regime, where no limit exists.
pub fn h1_diagnostic(path: &Trajectory) -> Result<H1Diagnostic> {
    let params = &path.params;
    let limit = regime_limit(params)?;
    let mut normalized = Vec::with_capacity(path.snapshots.len() + 1);
    let mut snapshots: Vec<&Snapshot> = path.snapshots.iter().collect();
    if snapshots.last().map(|s| s.n) != Some(path.terminal.n) {
        snapshots.push(&path.terminal);
    }
    let missing = || Error::TrackingDisabled("h1_diagnostic needs a path recorded with quadratic variation tracking");
    for s in snapshots {
        let m = s.martingale.as_ref().ok_or_else(missing)?;
        let qv = m.quadratic_variation.as_ref().ok_or_else(missing)?;
        if params.regime() == Regime::Critical && s.n < 2 {
            continue;
        }
        normalized.push((s.n, regime_normalized(params, s.n, m.b, qv)?));
    }
    let terminal = &normalized.last().ok_or(Error::HorizonTooSmall {
        what: "h1_diagnostic",
        min: 2,
        n: path.terminal.n,
    })?.1;
    let max_deviation = max_abs_deviation(terminal, &limit);
    Ok(H1Diagnostic {
        normalized,
        limit,
        max_deviation,
    })
}

/// Bound on `sup_k E[‖ε_k‖⁴ | F_{k−1}]`.
pub const FOURTH_MOMENT_BOUND: f64 = 4.0 / 3.0;
