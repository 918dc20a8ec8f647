//! Exact amplitudes of the form ((a + b·i) + (c + d·i)·sqrt(2)) / 2^k.
//!
//! Every coefficient produced by the polarization/path rewrites lives in this
//! ring (Gaussian integers adjoined sqrt(2), with dyadic denominators), so the
//! rewrites can be rerun without any rounding. sqrt(2) is irrational, hence a
//! value is zero iff all four integer parts are zero, and the canonical form
//! (no common factor of 2 while k > 0) is unique.

use std::ops::{Add, Mul, Neg};

use num_complex::Complex64;

use crate::state::Amplitude;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactAmp {
    /// Rational Gaussian part: a + b·i.
    a: i64,
    b: i64,
    /// sqrt(2) Gaussian part: (c + d·i)·sqrt(2).
    c: i64,
    d: i64,
    /// Power-of-two denominator exponent.
    halves: u32,
}

impl ExactAmp {
    pub fn new(a: i64, b: i64, c: i64, d: i64, halves: u32) -> Self {
        ExactAmp { a, b, c, d, halves }.canonical()
    }

    pub fn half() -> Self {
        ExactAmp::new(1, 0, 0, 0, 1)
    }

    fn canonical(mut self) -> Self {
        while self.halves > 0
            && self.a % 2 == 0
            && self.b % 2 == 0
            && self.c % 2 == 0
            && self.d % 2 == 0
        {
            self.a /= 2;
            self.b /= 2;
            self.c /= 2;
            self.d /= 2;
            self.halves -= 1;
        }
        if self.a == 0 && self.b == 0 && self.c == 0 && self.d == 0 {
            self.halves = 0;
        }
        self
    }

    pub fn to_complex(self) -> Complex64 {
        let denom = 2f64.powi(self.halves as i32);
        let s2 = std::f64::consts::SQRT_2;
        Complex64::new(
            (self.a as f64 + self.c as f64 * s2) / denom,
            (self.b as f64 + self.d as f64 * s2) / denom,
        )
    }
}

impl Add for ExactAmp {
    type Output = ExactAmp;
    fn add(self, rhs: ExactAmp) -> ExactAmp {
        let k = self.halves.max(rhs.halves);
        let ls = 1i64 << (k - self.halves);
        let rs = 1i64 << (k - rhs.halves);
        ExactAmp {
            a: self.a * ls + rhs.a * rs,
            b: self.b * ls + rhs.b * rs,
            c: self.c * ls + rhs.c * rs,
            d: self.d * ls + rhs.d * rs,
            halves: k,
        }
        .canonical()
    }
}

impl Neg for ExactAmp {
    type Output = ExactAmp;
    fn neg(self) -> ExactAmp {
        ExactAmp { a: -self.a, b: -self.b, c: -self.c, d: -self.d, halves: self.halves }
    }
}

fn gauss_mul(x: (i64, i64), y: (i64, i64)) -> (i64, i64) {
    (x.0 * y.0 - x.1 * y.1, x.0 * y.1 + x.1 * y.0)
}

impl Mul for ExactAmp {
    type Output = ExactAmp;
    // (g1 + h1·s)(g2 + h2·s) = g1·g2 + 2·h1·h2 + (g1·h2 + h1·g2)·s, s = sqrt(2)
    fn mul(self, rhs: ExactAmp) -> ExactAmp {
        let g1 = (self.a, self.b);
        let h1 = (self.c, self.d);
        let g2 = (rhs.a, rhs.b);
        let h2 = (rhs.c, rhs.d);
        let gg = gauss_mul(g1, g2);
        let hh = gauss_mul(h1, h2);
        let gh = gauss_mul(g1, h2);
        let hg = gauss_mul(h1, g2);
        ExactAmp {
            a: gg.0 + 2 * hh.0,
            b: gg.1 + 2 * hh.1,
            c: gh.0 + hg.0,
            d: gh.1 + hg.1,
            halves: self.halves + rhs.halves,
        }
        .canonical()
    }
}

impl Amplitude for ExactAmp {
    fn zero() -> Self {
        ExactAmp { a: 0, b: 0, c: 0, d: 0, halves: 0 }
    }
    fn one() -> Self {
        ExactAmp { a: 1, b: 0, c: 0, d: 0, halves: 0 }
    }
    fn i() -> Self {
        ExactAmp { a: 0, b: 1, c: 0, d: 0, halves: 0 }
    }
    // 1/sqrt(2) = sqrt(2)/2
    fn sqrt_half() -> Self {
        ExactAmp { a: 0, b: 0, c: 1, d: 0, halves: 1 }
    }
    fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0 && self.c == 0 && self.d == 0
    }
    fn is_finite(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_half_squares_to_half() {
        assert_eq!(ExactAmp::sqrt_half() * ExactAmp::sqrt_half(), ExactAmp::half());
    }

    #[test]
    fn i_squares_to_minus_one() {
        assert_eq!(ExactAmp::i() * ExactAmp::i(), -ExactAmp::one());
    }

    #[test]
    fn addition_aligns_denominators() {
        let x = ExactAmp::half() + ExactAmp::half();
        assert_eq!(x, ExactAmp::one());
        let y = ExactAmp::sqrt_half() + ExactAmp::sqrt_half();
        // 2/sqrt(2) = sqrt(2)
        assert_eq!(y, ExactAmp::new(0, 0, 1, 0, 0));
    }

    #[test]
    fn cancellation_is_exact() {
        let z = ExactAmp::sqrt_half() + -ExactAmp::sqrt_half();
        assert!(z.is_zero());
        assert_eq!(z, <ExactAmp as Amplitude>::zero());
    }

    #[test]
    fn converts_to_complex() {
        let x = ExactAmp::i() * ExactAmp::sqrt_half();
        let z = x.to_complex();
        assert!((z - Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-15);
    }
}
