// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

//! Closed-form limit constants of the center of mass.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::ln_gamma;
use crate::walk::{ModelParams, Regime};

/// Superdiffusive `a` closer than this to 1/2 hits the `Γ(2a − 1)` pole.
pub const POLE_GUARD: f64 = 1e-6;

/// Whether the almost-sure envelope is a proven limsup or only an upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LilKind {
    UpperBound,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LilConstant {
    pub value: f64,
    pub kind: LilKind,
}

/// All asymptotic constants available for one `(d, p)`. Fields that do not
/// apply to the regime are `None` and serialize as absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitConstants {
    pub params: ModelParams,
    pub regime: Regime,
    #[serde(skip_serializing_if = "Option::is_none")]
    clt_var: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    qsl_matrix_coeff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    qsl_trace: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lil: Option<LilConstant>,
    #[serde(skip_serializing_if = "Option::is_none")]
    variance_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    super_cov_coeff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    limit_v: Option<DMatrix<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    limit_w: Option<DMatrix<f64>>,
}

/// `2 / (3 (1 − 2a)(2 − a) d)`.
fn diffusive_variance(a: f64, d: f64) -> f64 {
    2.0 / (3.0 * (1.0 - 2.0 * a) * (2.0 - a) * d)
}

/// `(√3 + √(1 − 2a))² / (3 (a + 1)² (1 − 2a) d)`.
fn diffusive_lil_bound(a: f64, d: f64) -> f64 {
    let s = 3f64.sqrt() + (1.0 - 2.0 * a).sqrt();
    s * s / (3.0 * (a + 1.0).powi(2) * (1.0 - 2.0 * a) * d)
}

/// `1 / (d (a + 1)² (2a − 1)² Γ(2a − 1))` for `a > 1/2`.
fn superdiffusive_cov(a: f64, d: f64) -> f64 {
    let log = ln_gamma(2.0 * a - 1.0) + 2.0 * (a + 1.0).ln() + 2.0 * (2.0 * a - 1.0).ln() + d.ln();
    (-log).exp()
}

pub fn limit_constants(params: &ModelParams) -> Result<LimitConstants> {
    let d = params.dim();
    let df = d as f64;
    let a = params.a();
    let regime = params.regime();
    let mut out = LimitConstants {
        params: *params,
        regime,
        clt_var: None,
        qsl_matrix_coeff: None,
        qsl_trace: None,
        lil: None,
        variance_ratio: None,
        super_cov_coeff: None,
        limit_v: None,
        limit_w: None,
    };
    match regime {
        Regime::Diffusive => {
            let var = diffusive_variance(a, df);
            out.clt_var = Some(var);
            out.qsl_matrix_coeff = Some(var);
            out.qsl_trace = Some(var * df);
            out.lil = Some(LilConstant {
                value: diffusive_lil_bound(a, df),
                kind: LilKind::UpperBound,
            });
            out.variance_ratio = Some(variance_ratio(a)?);
            out.limit_v = limit_matrix_v(a, d).ok();
        }
        Regime::Critical => {
            let var = 4.0 / (9.0 * df);
            out.clt_var = Some(var);
            out.qsl_matrix_coeff = Some(var);
            out.qsl_trace = Some(4.0 / 9.0);
            out.lil = Some(LilConstant {
                value: var,
                kind: LilKind::Exact,
            });
            out.variance_ratio = Some(4.0 / 9.0);
            out.limit_w = Some(limit_matrix_w(d));
        }
        Regime::Superdiffusive => {
            if a - 0.5 < POLE_GUARD {
                return Err(Error::NearCriticalPole { a });
            }
            out.super_cov_coeff = Some(superdiffusive_cov(a, df));
        }
    }
    Ok(out)
}

impl LimitConstants {
    fn field(&self, value: Option<f64>, quantity: &'static str) -> Result<f64> {
        value.ok_or(Error::NotInRegime {
            quantity,
            regime: self.regime,
        })
    }

    /// Per-coordinate variance of the Gaussian limit of the normalized center of mass.
    pub fn clt_var(&self) -> Result<f64> {
        self.field(self.clt_var, "the CLT variance")
    }

    pub fn qsl_matrix_coeff(&self) -> Result<f64> {
        self.field(self.qsl_matrix_coeff, "the quadratic strong law matrix")
    }

    pub fn qsl_trace(&self) -> Result<f64> {
        self.field(self.qsl_trace, "the quadratic strong law trace")
    }

    pub fn lil(&self) -> Result<LilConstant> {
        self.lil.ok_or(Error::NotInRegime {
            quantity: "the iterated-logarithm constant",
            regime: self.regime,
        })
    }

    /// Ratio of the center-of-mass and walk asymptotic variances.
    pub fn variance_ratio(&self) -> Result<f64> {
        self.field(self.variance_ratio, "the variance ratio")
    }

    /// Coefficient of `I_d` in `E[G Gᵀ]` for the superdiffusive limit `G`.
    pub fn super_cov_coeff(&self) -> Result<f64> {
        self.field(self.super_cov_coeff, "the superdiffusive limit covariance")
    }

    pub fn limit_v(&self) -> Result<&DMatrix<f64>> {
        self.limit_v.as_ref().ok_or(Error::NotInRegime {
            quantity: "the limit matrix V",
            regime: self.regime,
        })
    }

    pub fn limit_w(&self) -> Result<&DMatrix<f64>> {
        self.limit_w.as_ref().ok_or(Error::NotInRegime {
            quantity: "the limit matrix W",
            regime: self.regime,
        })
    }
}

/// `R(a) = 2 / (3 (2 − a))` for `a < 1/2`.
pub fn variance_ratio(a: f64) -> Result<f64> {
    if a >= 0.5 || a.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "variance ratio needs a < 1/2, got {a}"
        )));
    }
    Ok(2.0 / (3.0 * (2.0 - a)))
}

/// `V = (d (a+1)²)⁻¹ [[1/(1−2a), 1/(2−a)], [1/(2−a), 1/3]] ⊗ I_d`.
pub fn limit_matrix_v(a: f64, d: usize) -> Result<DMatrix<f64>> {
    if a >= 0.5 || a.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "limit matrix V needs a < 1/2, got {a}"
        )));
    }
    if a <= -1.0 {
        return Err(Error::GainDomain(a));
    }
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    let c = 1.0 / (d as f64 * (a + 1.0).powi(2));
    let block = DMatrix::from_row_slice(
        2,
        2,
        &[
            1.0 / (1.0 - 2.0 * a),
            1.0 / (2.0 - a),
            1.0 / (2.0 - a),
            1.0 / 3.0,
        ],
    ) * c;
    Ok(block.kronecker(&DMatrix::identity(d, d)))
}

/// `W = (4 / 9d) [[1, 0], [0, 0]] ⊗ I_d`.
pub fn limit_matrix_w(d: usize) -> DMatrix<f64> {
    let block = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]) * (4.0 / (9.0 * d as f64));
    block.kronecker(&DMatrix::identity(d, d))
}

/// The contrast `v = (1, −1)ᵀ ⊗ I_d` mapping `V_n 𝓜_n` to `G_n / √n`.
pub fn contrast_vector(d: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 1, &[1.0, -1.0]).kronecker(&DMatrix::identity(d, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts(d: usize, p: f64) -> LimitConstants {
        limit_constants(&ModelParams::new(d, p).unwrap()).unwrap()
    }

    #[test]
    fn diffusive_examples() {
        assert!((consts(1, 0.5).clt_var().unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((consts(2, 0.5).clt_var().unwrap() - 0.6).abs() < 1e-14);
        let c = consts(3, 0.3);
        assert_eq!(c.lil().unwrap().kind, LilKind::UpperBound);
        assert!((c.qsl_trace().unwrap() - 3.0 * c.qsl_matrix_coeff().unwrap()).abs() < 1e-15);
        assert!(c.super_cov_coeff().is_err());
        assert!(c.limit_w().is_err());
    }

    #[test]
    fn critical_examples() {
        let c = consts(1, 0.75);
        assert!((c.clt_var().unwrap() - 4.0 / 9.0).abs() < 1e-15);
        assert_eq!(
            c.lil().unwrap(),
            LilConstant {
                value: 4.0 / 9.0,
                kind: LilKind::Exact
            }
        );
        let c = consts(2, 0.625);
        assert!((c.qsl_trace().unwrap() - 4.0 / 9.0).abs() < 1e-15);
        assert!((c.clt_var().unwrap() - 2.0 / 9.0).abs() < 1e-15);
        assert!(c.limit_v().is_err());
    }

    #[test]
    fn superdiffusive_examples() {
        let c = consts(1, 0.85);
        let expected = 1.0 / (1.7f64.powi(2) * 0.4f64.powi(2) * 2.218_159_543_757_688);
        assert!((c.super_cov_coeff().unwrap() - expected).abs() < 1e-12);
        assert!(matches!(c.clt_var(), Err(Error::NotInRegime { .. })));
        assert!(matches!(c.lil(), Err(Error::NotInRegime { .. })));
    }

    #[test]
    fn near_pole_rejected() {
        // d = 1, a = 2p − 1 = 0.5 + 5e-7
        let params = ModelParams::new(1, 0.75 + 2.5e-7).unwrap();
        assert!(matches!(limit_constants(&params), Err(Error::NearCriticalPole { .. })));
    }

    #[test]
    fn variance_ratio_examples() {
        assert!((variance_ratio(0.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((variance_ratio(-1.0).unwrap() - 2.0 / 9.0).abs() < 1e-15);
        assert!(variance_ratio(0.5 - 1e-9).unwrap() < 4.0 / 9.0);
        assert!(variance_ratio(0.5).is_err());
    }

    #[test]
    fn v_and_w_shapes() {
        let v = limit_matrix_v(0.0, 1).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0 / 3.0]);
        assert!((v - expected).abs().max() < 1e-15);
        for d in 1..5 {
            let w = limit_matrix_w(d);
            assert!((w.trace() - 4.0 / 9.0).abs() < 1e-15);
            assert_eq!(w.rank(1e-12), d);
            let v = limit_matrix_v(0.2, d).unwrap();
            assert!(v.clone().cholesky().is_some());
            assert_eq!(v.transpose(), v);
        }
        assert!(limit_matrix_v(0.5, 1).is_err());
    }

    #[test]
    fn contrast_recovers_clt_covariance_on_grid() {
        for d in 1..4 {
            let v = contrast_vector(d);
            for i in 0..100 {
                let a = -1.0 + 1.49 * i as f64 / 99.0;
                if a <= -1.0 {
                    continue;
                }
                let vv = v.transpose() * limit_matrix_v(a, d).unwrap() * &v;
                let target = DMatrix::identity(d, d) * diffusive_variance(a, d as f64);
                assert!((vv - target).abs().max() < 1e-12, "a={a} d={d}");
            }
        }
    }

    #[test]
    fn lil_bound_dominates_clt_variance() {
        for i in 0..100 {
            let a = -1.0 + 1.49 * i as f64 / 99.0;
            assert!(diffusive_lil_bound(a, 1.0) >= diffusive_variance(a, 1.0));
        }
    }

    #[test]
    fn constants_serialize_without_foreign_fields() {
        let json = serde_json::to_string(&consts(1, 0.85)).unwrap();
        assert!(json.contains("super_cov_coeff"));
        assert!(!json.contains("clt_var"));
    }
}
