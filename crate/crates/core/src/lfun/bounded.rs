use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::Serialize;

use crate::summation::UNIT_ROUNDOFF;

/// A value together with a proven bound on its distance to the exact quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundedValue {
    pub value: f64,
    pub radius: f64,
}

impl BoundedValue {
    pub fn new(value: f64, radius: f64) -> Self {
        debug_assert!(radius >= 0.0, "negative radius {radius}");
        Self { value, radius }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, radius: 0.0 }
    }

    pub fn lower(&self) -> f64 {
        self.value - self.radius
    }

    pub fn upper(&self) -> f64 {
        self.value + self.radius
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.radius
    }

    /// True when both enclosures can hold the same exact value.
    pub fn overlaps(&self, other: &Self) -> bool {
        (self.value - other.value).abs() <= self.radius + other.radius
    }

    /// Natural log; needs `radius <= value / 2` so the first-order bound
    /// with safety factor 2 holds.
    pub fn ln(self) -> Option<Self> {
        if !(self.value > 0.0) || self.radius > self.value / 2.0 {
            return None;
        }
        let value = self.value.ln();
        let radius = 2.0 * self.radius / self.value + 2.0 * UNIT_ROUNDOFF * value.abs();
        Some(Self { value, radius })
    }

    pub fn exp(self) -> Self {
        let value = self.value.exp();
        let radius = value * self.radius.exp_m1() * (1.0 + 4.0 * UNIT_ROUNDOFF) + 2.0 * UNIT_ROUNDOFF * value;
        Self { value, radius }
    }
}

impl Add for BoundedValue {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let value = self.value + rhs.value;
        Self { value, radius: self.radius + rhs.radius + UNIT_ROUNDOFF * value.abs() }
    }
}

impl Sub for BoundedValue {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for BoundedValue {
    type Output = Self;
    fn neg(self) -> Self {
        Self { value: -self.value, radius: self.radius }
    }
}

impl fmt::Display for BoundedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.16e} ± {:.3e}", self.value, self.radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_encloses_endpoints() {
        let b = BoundedValue::new(2.0, 0.01);
        let l = b.ln().unwrap();
        assert!(l.contains(1.99f64.ln()));
        assert!(l.contains(2.01f64.ln()));
        assert!(BoundedValue::new(1.0, 0.6).ln().is_none());
        assert!(BoundedValue::new(-1.0, 0.0).ln().is_none());
        assert!(BoundedValue::new(0.0, 0.0).ln().is_none());
    }

    #[test]
    fn exp_encloses_endpoints() {
        let e = BoundedValue::new(0.5, 1e-3).exp();
        assert!(e.contains(0.499f64.exp()));
        assert!(e.contains(0.501f64.exp()));
    }

    #[test]
    fn sums_add_radii() {
        let s = BoundedValue::new(1.0, 0.1) - BoundedValue::new(0.25, 0.05);
        assert_eq!(s.value, 0.75);
        assert!(s.radius >= 0.15);
        assert!(BoundedValue::new(1.0, 0.1).overlaps(&BoundedValue::new(1.15, 0.05)));
        assert!(!BoundedValue::new(1.0, 0.1).overlaps(&BoundedValue::new(1.2, 0.05)));
    }
}
