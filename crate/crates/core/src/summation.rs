//! Compensated summation with a running bound on the absolute error.

/// Unit roundoff of `f64`.
pub const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

/// Neumaier (improved Kahan) accumulator that also tracks an upper bound on
/// the accumulated floating-point error.
///
/// Each pushed term is assumed to carry a relative error of at most
/// `term_rel_error` (2 ulp for `exp(-σ ln p)`). The summation itself
/// contributes at most `(2u + n u²) Σ|t|` for compensated summation.
#[derive(Debug, Clone)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
    abs_sum: f64,
    term_error: f64,
    count: u64,
    term_rel_error: f64,
    /// Every term so far was an exact integer.
    integral: bool,
}

impl Default for CompensatedSum {
    fn default() -> Self {
        Self::new(2.0 * f64::EPSILON)
    }
}

impl CompensatedSum {
    pub fn new(term_rel_error: f64) -> Self {
        Self { sum: 0.0, comp: 0.0, abs_sum: 0.0, term_error: 0.0, count: 0, term_rel_error, integral: false }
    }

    /// Accumulator for terms that are exact. Integer terms with
    /// `Σ|t| <= 2^53` are summed without any rounding, and the bound is 0.
    pub fn exact_terms() -> Self {
        Self { integral: true, ..Self::new(0.0) }
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
        self.integral &= v.fract() == 0.0;
        self.abs_sum += v.abs();
        self.term_error += self.term_rel_error * v.abs();
        self.count += 1;
    }

    /// Add a term whose own absolute error is at most `abs_error`.
    #[inline]
    pub fn add_with_error(&mut self, v: f64, abs_error: f64) {
        self.add(v);
        self.integral &= abs_error == 0.0;
        self.term_error += abs_error;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn abs_sum(&self) -> f64 {
        self.abs_sum
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Upper bound on `|value() - Σ exact terms|`.
    pub fn error_bound(&self) -> f64 {
        if self.count == 0 || (self.integral && self.abs_sum <= 9_007_199_254_740_992.0) {
            return 0.0;
        }
        let n = self.count as f64;
        let u = UNIT_ROUNDOFF;
        // abs_sum itself is rounded; inflate by (1 + n u) to stay an upper bound.
        let abs_sum = self.abs_sum * (1.0 + 2.0 * n * u);
        let summation = (2.0 * u + n * u * u) * abs_sum;
        let final_round = u * abs_sum;
        (self.term_error * (1.0 + 2.0 * n * u) + summation + final_round) * (1.0 + 4.0 * u)
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn integer_terms_have_zero_bound() {
        let mut s = CompensatedSum::exact_terms();
        s.extend([1.0, -1.0, -1.0, 1.0, -1.0]);
        assert_eq!(s.value(), -1.0);
        assert_eq!(s.error_bound(), 0.0);
        s.add(0.5);
        assert!(s.error_bound() > 0.0);
        let mut t = CompensatedSum::exact_terms();
        t.add_with_error(1.0, 1e-3);
        assert!(t.error_bound() >= 1e-3);
    }

    use super::*;

    #[test]
    fn recovers_cancelled_terms() {
        let mut s = CompensatedSum::exact_terms();
        s.extend([1.0, 1e100, 1.0, -1e100]);
        assert_eq!(s.value(), 2.0);
        assert_eq!(s.count(), 4);
    }

    #[test]
    fn bound_is_monotone_and_nonnegative() {
        let mut s = CompensatedSum::default();
        let mut last = s.error_bound();
        assert_eq!(last, 0.0);
        for k in 1..1000 {
            s.add(if k % 3 == 0 { -1.0 } else { 1.0 } / k as f64);
            let b = s.error_bound();
            assert!(b >= 0.0);
            assert!(b >= last, "bound shrank at k={k}");
            last = b;
        }
    }

    #[test]
    fn harmonic_error_within_bound() {
        // exact rational reference: sum of 1/k for k <= 30 computed in u128 fractions
        let (mut num, mut den) = (0u128, 1u128);
        for k in 1..=30u128 {
            num = num * k + den;
            den *= k;
            let g = gcd(num, den);
            num /= g;
            den /= g;
        }
        let exact = num as f64 / den as f64;
        let mut s = CompensatedSum::default();
        s.extend((1..=30).map(|k| 1.0 / k as f64));
        assert!((s.value() - exact).abs() <= s.error_bound() + exact * UNIT_ROUNDOFF);
    }

    fn gcd(a: u128, b: u128) -> u128 {
        if b == 0 { a } else { gcd(b, a % b) }
    }
}
