//! Double-double arithmetic (about 106 bits of significand), used by the
//! extended-precision race mode.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

/// ln 2 to double-double precision.
#[allow(clippy::excessive_precision)]
const LN2: DoubleDouble = DoubleDouble { hi: std::f64::consts::LN_2, lo: 2.319046813846299558e-17 };

/// Relative accuracy assumed for [`DoubleDouble::exp`] and [`DoubleDouble::ln`].
pub const DD_FN_REL_ERROR: f64 = 1e-29;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
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

    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Self { hi, lo }
    }

    pub fn from_u64(n: u64) -> Self {
        let hi = n as f64;
        // n - hi is exact in i128 and fits in f64 exactly (|n - hi| < 2^11)
        let lo = (n as i128 - hi as i128) as f64;
        Self::new(hi, lo)
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        Self::new(p, e)
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Self::ZERO;
        }
        // one Newton step from the f64 root doubles the precision
        let x = self.hi.sqrt();
        let (sq, sq_err) = two_prod(x, x);
        let diff = (self - Self::new(sq, sq_err)).to_f64();
        Self::new(x, diff / (2.0 * x))
    }

    /// Natural exponential.
    pub fn exp(self) -> Self {
        if self.hi == 0.0 {
            return Self::ONE;
        }
        // x = k ln2 + r, then exp(r) = (exp(r / 2^10))^(2^10)
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2.mul_f64(k);
        let scale = 1024.0;
        let r = Self::new(r.hi / scale, r.lo / scale);
        // Taylor series of expm1 on |r| < 4e-4
        let mut term = r;
        let mut sum = r;
        let mut n = 1.0;
        while term.hi.abs() > 1e-36 {
            n += 1.0;
            term = (term * r) / Self::from(n);
            sum = sum + term;
        }
        // (1 + s)^2 - 1 = s (2 + s), repeated ten times keeps precision near 1
        for _ in 0..10 {
            sum = sum * (sum + Self::from(2.0));
        }
        let e = sum + Self::ONE;
        let p = 2f64.powi(k as i32);
        Self { hi: e.hi * p, lo: e.lo * p }
    }

    /// Natural logarithm of a positive value.
    pub fn ln(self) -> Self {
        assert!(self.hi > 0.0, "ln of non-positive double-double");
        // Newton on exp(y) = x: y <- y + x exp(-y) - 1, twice from the f64 guess
        let mut y = Self::from(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - Self::ONE;
        }
        y
    }
}

impl From<f64> for DoubleDouble {
    fn from(v: f64) -> Self {
        Self { hi: v, lo: 0.0 }
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, b: Self) -> Self {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (s, e) = quick_two_sum(s, e + f);
        Self { hi: s, lo: e }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        Self::new(p, e)
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, b: Self) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        Self::new(q1, q2) + Self::from(q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: DoubleDouble, b: DoubleDouble, rel: f64) -> bool {
        ((a - b).to_f64()).abs() <= rel * b.to_f64().abs()
    }

    #[test]
    fn division_roundtrip() {
        let three = DoubleDouble::from(3.0);
        let third = DoubleDouble::ONE / three;
        assert!(close(third * three, DoubleDouble::ONE, 1e-31));
        assert!(third.lo != 0.0);
    }

    #[test]
    fn sqrt_squares_back() {
        for n in [2u64, 3, 5, 1_000_003, 99_999_989] {
            let x = DoubleDouble::from_u64(n);
            let r = x.sqrt();
            assert!(close(r * r, x, 1e-31), "n = {n}");
        }
    }

    #[test]
    fn exp_ln_inverse_and_known_values() {
        let e = DoubleDouble::ONE.exp();
        // e = 2.718281828459045 + 1.4456468917292502e-16
        assert!(close(e, DoubleDouble::new(std::f64::consts::E, 1.445_646_891_729_250_2e-16), 1e-30));
        assert!(close(DoubleDouble::from(2.0).ln(), LN2, 1e-30));
        for v in [0.001, 0.7, 3.0, 1234.5, 99_999_989.0] {
            let x = DoubleDouble::from(v);
            assert!(close(x.ln().exp(), x, 1e-29), "v = {v}");
        }
        for v in [-40.0, -3.3, 0.5, 20.0] {
            let x = DoubleDouble::from(v);
            assert!(close(x.exp().ln(), x, 1e-29), "v = {v}");
        }
    }

    #[test]
    fn from_u64_is_exact() {
        let n = (1u64 << 60) + 12345;
        let d = DoubleDouble::from_u64(n);
        assert_eq!(d.hi as i128 + d.lo as i128, n as i128);
    }
}
