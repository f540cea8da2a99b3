//! Truncated Abel identity for the step function `A(u) = Σ_{p<=u} w(p) p^{-σ}`:
//!
//! ```text
//! Σ_{p<=X} w(p) p^{-s} = A(X) X^{-(s-σ)} + (s-σ) ∫_1^X A(u) u^{-(s-σ)-1} du
//! ```
//!
//! `A` is constant between consecutive primes, so with `c = s - σ` each piece
//! `[a, b)` contributes `(s-σ) A (a^{-c} - b^{-c}) / c = A (a^{-c} - b^{-c})`
//! exactly, and no quadrature error enters.

use serde::Serialize;

use super::LfunError;
use crate::characters::DirichletWeight;
use crate::sieve::Sieve;
use crate::summation::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MellinCheck {
    pub sigma: f64,
    pub s: f64,
    pub x: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// `a^{-c} - b^{-c}` for `1 <= a < b` without cancellation.
fn power_gap(a: f64, b: f64, c: f64) -> f64 {
    let log_ratio = ((b - a) / a).ln_1p();
    -a.powf(-c) * (-c * log_ratio).exp_m1()
}

/// Both sides of the truncated identity and `|LHS - RHS|`.
pub fn mellin_identity_check(w: &DirichletWeight, sigma: f64, s: f64, x: u64) -> Result<MellinCheck, LfunError> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(LfunError::Domain { operation: "mellin_identity_check", requirement: "sigma >= 0", sigma });
    }
    if !(s >= sigma) || !s.is_finite() {
        return Err(LfunError::DegenerateExponent { sigma, s });
    }
    if x < 2 {
        return Err(LfunError::Truncation { operation: "mellin_identity_check", parameter: "X", value: x, minimum: 2 });
    }
    let c = s - sigma;
    let xf = x as f64;

    let mut lhs = CompensatedSum::default();
    let mut race = CompensatedSum::default();
    let mut integral = CompensatedSum::default();
    let mut piece_start: Option<f64> = None;

    for p in Sieve::new(x).primes() {
        let pf = p as f64;
        if let (Some(a), true) = (piece_start, c != 0.0) {
            integral.add(race.value() * power_gap(a, pf, c));
        }
        let wp = w.at_prime(p);
        if wp != 0.0 {
            lhs.add(wp * pf.powf(-s));
            race.add(wp * pf.powf(-sigma));
        }
        piece_start = Some(pf);
    }
    let a_x = race.value();
    let rhs = if c == 0.0 {
        a_x
    } else {
        if let Some(a) = piece_start.filter(|&a| a < xf) {
            integral.add(a_x * power_gap(a, xf, c));
        }
        let mut total = CompensatedSum::default();
        total.add(a_x * xf.powf(-c));
        total.add(integral.value());
        total.value()
    };
    let lhs = lhs.value();
    Ok(MellinCheck { sigma, s, x, lhs, rhs, residual: (lhs - rhs).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::chi4;

    #[test]
    fn small_chi4_case() {
        let m = mellin_identity_check(&chi4(), 0.0, 2.0, 10).unwrap();
        assert!((m.lhs - (-1.0 / 9.0 + 1.0 / 25.0 - 1.0 / 49.0)).abs() < 1e-16);
        assert!(m.residual < 1e-14, "{m:?}");
    }

    #[test]
    fn degenerate_exponent_is_exact() {
        for (sigma, x) in [(0.0, 10), (0.5, 1000), (0.9, 12345)] {
            let m = mellin_identity_check(&chi4(), sigma, sigma, x).unwrap();
            assert_eq!(m.residual, 0.0);
            assert_eq!(m.lhs, m.rhs);
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(mellin_identity_check(&chi4(), 1.0, 0.5, 10), Err(LfunError::DegenerateExponent { .. })));
        assert!(matches!(mellin_identity_check(&chi4(), -0.5, 0.5, 10), Err(LfunError::Domain { .. })));
        assert!(matches!(mellin_identity_check(&chi4(), 0.0, 0.5, 1), Err(LfunError::Truncation { .. })));
    }

    #[test]
    fn power_gap_matches_direct_difference() {
        for (a, b, c) in [(2.0, 3.0, 1.0), (7.0, 11.0, 0.25), (99_991.0, 100_000.0, 2.5)] {
            let direct: f64 = f64::powf(a, -c) - f64::powf(b, -c);
            assert!((power_gap(a, b, c) - direct).abs() <= 1e-15 * direct.abs().max(1e-300) * 1e3);
        }
    }
}
