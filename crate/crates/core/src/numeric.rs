// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

//! Small numerical kernels: compensated summation, double-double arithmetic
//! and Gamma-function ratios.

use std::ops::{Add, AddAssign, Div, Mul, Sub};

use serde::{Deserialize, Serialize};

/// Neumaier-compensated running sum.
///
/// Keeps the rounding error of every addition in a separate term so long
/// accumulations (10^6 and more terms of very different magnitudes) stay
/// accurate to a few ulps of the exact sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub const fn new() -> Self {
        Self {
            sum: 0.0,
            compensation: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`, about 106 significant bits.
///
/// Built on the exact transforms `two_sum` and `two_prod` (via fused
/// multiply-add), following the classic double-double algorithms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn value(self) -> f64 {
        self.hi + self.lo
    }

    /// Exact `a + b`.
    #[inline]
    pub fn sum(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, b);
        Self { hi, lo }
    }

    #[inline]
    pub fn recip(self) -> Self {
        Self::ONE / self
    }
}

impl From<f64> for DoubleDouble {
    #[inline]
    fn from(hi: f64) -> Self {
        Self { hi, lo: 0.0 }
    }
}

impl Add for DoubleDouble {
    type Output = Self;

    #[inline]
    fn add(self, rhs: Self) -> Self {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Self { hi, lo }
    }
}

impl AddAssign for DoubleDouble {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for DoubleDouble {
    type Output = Self;

    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self + Self {
            hi: -rhs.hi,
            lo: -rhs.lo,
        }
    }
}

impl Mul for DoubleDouble {
    type Output = Self;

    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let (p1, p2) = two_prod(self.hi, rhs.hi);
        let p2 = p2 + (self.hi * rhs.lo + self.lo * rhs.hi);
        let (hi, lo) = quick_two_sum(p1, p2);
        Self { hi, lo }
    }
}

impl Mul<f64> for DoubleDouble {
    type Output = Self;

    #[inline]
    fn mul(self, rhs: f64) -> Self {
        let (p1, p2) = two_prod(self.hi, rhs);
        let (hi, lo) = quick_two_sum(p1, p2 + self.lo * rhs);
        Self { hi, lo }
    }
}

impl Div for DoubleDouble {
    type Output = Self;

    #[inline]
    fn div(self, rhs: Self) -> Self {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * q1;
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * q2;
        let q3 = r.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo } + Self::from(q3)
    }
}

impl Div<f64> for DoubleDouble {
    type Output = Self;

    #[inline]
    fn div(self, rhs: f64) -> Self {
        let q1 = self.hi / rhs;
        let (p1, p2) = two_prod(q1, rhs);
        let (s, e) = two_sum(self.hi, -p1);
        let q2 = (s + (e - p2 + self.lo)) / rhs;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo }
    }
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// `Γ(x)` for `x > 0`, evaluated through the logarithm.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

// Bernoulli-number coefficients B_{2k} / (2k (2k - 1)) of the Stirling series.
const STIRLING: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
];

const STIRLING_SHIFT: f64 = 16.0;

fn stirling_tail(z: f64) -> f64 {
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut acc = 0.0;
    for c in STIRLING.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

/// `ln Γ(x + a) − ln Γ(x)` without the catastrophic cancellation of
/// subtracting two large log-Gamma values.
///
/// Requires `x > 0` and `x + a > 0`. Small `x` are shifted up with the
/// functional equation until the Stirling series is accurate, then the
/// leading terms are combined through `ln_1p`.
pub fn ln_gamma_ratio(x: f64, a: f64) -> f64 {
    debug_assert!(x > 0.0 && x + a > 0.0);
    if a == 0.0 {
        return 0.0;
    }
    let mut x = x;
    let mut shift = CompensatedSum::new();
    while x < STIRLING_SHIFT {
        // Γ(x + a) / Γ(x) = [Γ(x + 1 + a) / Γ(x + 1)] · x / (x + a)
        shift.add(-(a / x).ln_1p());
        x += 1.0;
    }
    let leading = (x - 0.5) * (a / x).ln_1p() + a * (x + a).ln() - a;
    leading + (stirling_tail(x + a) - stirling_tail(x)) + shift.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_lost_bits() {
        let mut acc = CompensatedSum::new();
        acc.add(1.0);
        for _ in 0..1_000_000 {
            acc.add(1e-16);
        }
        assert!((acc.value() - (1.0 + 1e-10)).abs() < 1e-22);
    }

    #[test]
    fn double_double_division_is_exact_on_representable_quotients() {
        for k in 1..10_000u32 {
            let x = DoubleDouble::from(k as f64);
            assert_eq!(x / x, DoubleDouble::ONE);
            assert_eq!((x * 3.0) / DoubleDouble::from(3.0), x);
            assert_eq!((x * 3.0) / 3.0, x);
        }
    }

    #[test]
    fn double_double_carries_106_bits() {
        // (1 + 2^-60)² = 1 + 2^-59 + 2^-120; the last term is below the precision.
        let x = DoubleDouble::sum(1.0, 2f64.powi(-60));
        let sq = x * x;
        assert_eq!(sq.hi, 1.0);
        assert_eq!(sq.lo, 2f64.powi(-59));
        let third = DoubleDouble::ONE / DoubleDouble::from(3.0);
        let back = third * 3.0 - DoubleDouble::ONE;
        assert!(back.value().abs() < 1e-31);
        let back = (DoubleDouble::ONE / 3.0) * 3.0 - DoubleDouble::ONE;
        assert!(back.value().abs() < 1e-31);
        let r = DoubleDouble::from(7.0).recip() * DoubleDouble::from(7.0);
        assert!((r - DoubleDouble::ONE).value().abs() < 1e-31);
    }

    #[test]
    fn gamma_ratio_matches_direct_difference_for_small_arguments() {
        for &(x, a) in &[(1.0, 0.5), (2.5, 0.3), (7.0, -0.4), (30.0, 0.7), (100.0, 1.0)] {
            let direct = ln_gamma(x + a) - ln_gamma(x);
            assert!(
                (ln_gamma_ratio(x, a) - direct).abs() < 1e-12,
                "x={x} a={a}"
            );
        }
    }

    #[test]
    fn gamma_ratio_integer_shift_is_log() {
        // Γ(x + 1) / Γ(x) = x
        for &x in &[1.0, 3.0, 17.5, 1e3, 1e7] {
            let got = ln_gamma_ratio(x, 1.0);
            assert!((got - f64::ln(x)).abs() < 1e-13 * f64::ln(x).abs().max(1.0));
        }
    }

    #[test]
    fn gamma_half_integer() {
        // Γ(1/2) = √π
        assert!((gamma(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }
}
