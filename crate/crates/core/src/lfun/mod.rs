//! Dirichlet L-values and the prime-sum identities around `log L(σ, χ)`, for
//! real `σ`, every quantity carried as a [`BoundedValue`].
//!
//! `L(σ, χ)` is evaluated by partial summation against the character sum
//! `S(u) = Σ_{n<=u} χ(n)`, which is periodic and bounded for a non-principal
//! character. With `N` a multiple of `q` and `S̄` the mean of `S` over a
//! period,
//!
//! ```text
//! Σ_{n>N} χ(n) n^{-σ} = S̄ N^{-σ} + σ ∫_N^∞ (S(u) - S̄) u^{-σ-1} du
//! ```
//!
//! and integrating the zero-mean remainder by parts once more bounds it by
//! `σ G_max N^{-σ-1}`, where `G_max` is the largest absolute value of the
//! integral of `S - S̄` over a partial period.

mod bounded;
mod mellin;
mod scans;

pub use bounded::BoundedValue;
pub use mellin::{mellin_identity_check, MellinCheck};
pub use scans::{bias_bound_scan, conjecture_scan, BiasRow, ConjectureReport, ScanOptions, DEFAULT_CONJECTURE_BUDGET};

use serde::Serialize;
use thiserror::Error;

use crate::characters::{Character, DirichletWeight};
use crate::races::RaceError;
use crate::sieve::Sieve;
use crate::summation::{CompensatedSum, UNIT_ROUNDOFF};

/// Default `m_max` for [`b_function`].
pub const DEFAULT_M_MAX: u32 = 64;
/// Default truncation for [`l_value`] in the scans and the CLI.
pub const DEFAULT_N_TRUNC: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LfunError {
    #[error("{operation} requires a non-principal character, not a general weight")]
    NotCharacter { operation: &'static str },
    #[error("{operation} requires {requirement}, got sigma = {sigma}")]
    Domain { operation: &'static str, requirement: &'static str, sigma: f64 },
    #[error("{operation}: {parameter} = {value} must be at least {minimum}")]
    Truncation { operation: &'static str, parameter: &'static str, value: u64, minimum: u64 },
    #[error("log of L-value {value} ± {radius} is undefined")]
    LogDomain { value: f64, radius: f64 },
    #[error("mellin check requires s >= sigma (s = {s}, sigma = {sigma})")]
    DegenerateExponent { sigma: f64, s: f64 },
    #[error("points must be ascending")]
    Unordered,
    #[error("largest point {max} exceeds the budget {budget}")]
    Budget { max: u64, budget: u64 },
    #[error(transparent)]
    Race(#[from] RaceError),
}

fn require_character<'a>(w: &'a DirichletWeight, operation: &'static str) -> Result<&'a Character, LfunError> {
    w.as_character().ok_or(LfunError::NotCharacter { operation })
}

/// Mean of `S` over a period and the largest `|∫ (S - S̄)|` over a partial period.
fn character_sum_moments(c: &Character) -> (f64, f64) {
    let q = c.modulus() as i64;
    let period = c.period();
    // S(r) for r = 0..q
    let mut s = Vec::with_capacity(q as usize);
    let mut acc = 0i64;
    for r in 0..q {
        if r > 0 {
            acc += period[r as usize] as i64;
        }
        s.push(acc);
    }
    let total: i64 = s.iter().sum();
    // q·G(k) = Σ_{j<k} (q S(j) - total), exact in integers
    let mut g = 0i64;
    let mut g_max = 0i64;
    for &sj in &s {
        g += q * sj - total;
        g_max = g_max.max(g.abs());
    }
    (total as f64 / q as f64, g_max as f64 / q as f64)
}

/// `L(σ, χ)` for real `σ > 0` from the first `N` terms plus the averaged
/// partial-summation tail, `N` being `n_trunc` rounded down to a multiple of `q`.
pub fn l_value(w: &DirichletWeight, sigma: f64, n_trunc: u64) -> Result<BoundedValue, LfunError> {
    let c = require_character(w, "l_value")?;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(LfunError::Domain { operation: "l_value", requirement: "sigma > 0", sigma });
    }
    let q = c.modulus();
    if n_trunc < q {
        return Err(LfunError::Truncation { operation: "l_value", parameter: "n_trunc", value: n_trunc, minimum: q });
    }
    let n = n_trunc / q * q;

    let mut sum = CompensatedSum::default();
    for k in 1..=n {
        let v = c.at(k);
        if v != 0 {
            sum.add(v as f64 * (k as f64).powf(-sigma));
        }
    }
    let (mean, g_max) = character_sum_moments(c);
    let n_pow = (n as f64).powf(-sigma);
    let correction = mean * n_pow;
    let value = sum.value() + correction;
    let tail = sigma * g_max * n_pow / n as f64;
    let rounding = sum.error_bound() + 4.0 * UNIT_ROUNDOFF * correction.abs() + UNIT_ROUNDOFF * value.abs();
    Ok(BoundedValue::new(value, (tail + rounding) * (1.0 + 8.0 * UNIT_ROUNDOFF)))
}

/// `Π_{p<=P} (1 - w(p) p^{-σ})^{-1}` for `σ > 1`.
pub fn euler_product_value(w: &DirichletWeight, sigma: f64, prime_limit: u64) -> Result<BoundedValue, LfunError> {
    if !(sigma > 1.0) || !sigma.is_finite() {
        return Err(LfunError::Domain { operation: "euler_product_value", requirement: "sigma > 1", sigma });
    }
    if prime_limit < 2 {
        return Err(LfunError::Truncation {
            operation: "euler_product_value",
            parameter: "prime_limit",
            value: prime_limit,
            minimum: 2,
        });
    }
    let mut log_sum = CompensatedSum::default();
    for p in Sieve::new(prime_limit).primes() {
        let x = w.at_prime(p) * (p as f64).powf(-sigma);
        if x != 0.0 {
            log_sum.add(-(-x).ln_1p());
        }
    }
    // |log(1 - x)^{-1}| <= 2|x| for |x| <= 1/2, and Σ_{p>P} p^{-σ} <= P^{1-σ}/(σ-1)
    let tail = 2.0 * (prime_limit as f64).powf(1.0 - sigma) / (sigma - 1.0);
    let log_value = BoundedValue::new(log_sum.value(), tail + log_sum.error_bound());
    Ok(log_value.exp())
}

/// Truncated `Σ_{p<=P} w(p) p^{-σ}` for `σ > 1` with the tail bound
/// `Σ_{p>P} p^{-σ} <= P^{1-σ}/(σ-1)`.
pub fn prime_sum(w: &DirichletWeight, sigma: f64, prime_limit: u64) -> Result<BoundedValue, LfunError> {
    if !(sigma > 1.0) || !sigma.is_finite() {
        return Err(LfunError::Domain { operation: "prime_sum", requirement: "sigma > 1", sigma });
    }
    let mut sum = CompensatedSum::default();
    for p in Sieve::new(prime_limit).primes() {
        let wp = w.at_prime(p);
        if wp != 0.0 {
            sum.add(wp * (p as f64).powf(-sigma));
        }
    }
    let tail = (prime_limit.max(1) as f64).powf(1.0 - sigma) / (sigma - 1.0);
    Ok(BoundedValue::new(sum.value(), tail + sum.error_bound()))
}

/// `B(σ) = Σ_p Σ_{m>=2} w(p)^m / (m p^{mσ})` truncated at `p <= P`, `m <= m_max`.
pub fn b_function(w: &DirichletWeight, sigma: f64, prime_limit: u64, m_max: u32) -> Result<BoundedValue, LfunError> {
    if !(sigma > 0.5) || !sigma.is_finite() {
        return Err(LfunError::Domain { operation: "b_function", requirement: "sigma > 1/2", sigma });
    }
    if prime_limit < 2 {
        return Err(LfunError::Truncation { operation: "b_function", parameter: "prime_limit", value: prime_limit, minimum: 2 });
    }
    if m_max < 2 {
        return Err(LfunError::Truncation { operation: "b_function", parameter: "m_max", value: m_max as u64, minimum: 2 });
    }
    let mut sum = CompensatedSum::new(0.0);
    let mut m_tail = 0.0f64;
    for p in Sieve::new(prime_limit).primes() {
        let x = w.at_prime(p) * (p as f64).powf(-sigma);
        if x == 0.0 {
            continue;
        }
        let ax = x.abs();
        let mut power = x;
        for m in 2..=m_max {
            power *= x;
            if power == 0.0 {
                break;
            }
            let t = power / m as f64;
            // x carries one rounding from powf, each product one more, the division one
            sum.add_with_error(t, (m as f64 + 3.0) * UNIT_ROUNDOFF * t.abs());
        }
        let next = m_max as i32 + 1;
        m_tail += ax.powi(next) / (next as f64 * (1.0 - ax));
    }
    let pl = prime_limit as f64;
    let p_tail = pl.powf(1.0 - 2.0 * sigma) / ((2.0 * sigma - 1.0) * (1.0 - pl.powf(-sigma)));
    let radius = (m_tail + p_tail) * (1.0 + 8.0 * UNIT_ROUNDOFF) + sum.error_bound();
    Ok(BoundedValue::new(sum.value(), radius))
}

/// Truncation parameters for [`verify_log_decomposition`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionLimits {
    pub n_trunc: u64,
    pub prime_limit: u64,
    pub m_max: u32,
}

impl Default for DecompositionLimits {
    fn default() -> Self {
        Self { n_trunc: DEFAULT_N_TRUNC, prime_limit: 10_000_000, m_max: DEFAULT_M_MAX }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub sigma: f64,
    pub log_l: BoundedValue,
    pub prime_sum: BoundedValue,
    pub b_value: BoundedValue,
    /// `log_l - prime_sum - b_value` on the centers.
    pub residual: f64,
}

impl DecompositionReport {
    pub fn radius_sum(&self) -> f64 {
        self.log_l.radius + self.prime_sum.radius + self.b_value.radius
    }

    pub fn within_radii(&self) -> bool {
        self.residual.abs() <= self.radius_sum()
    }
}

/// Check `log L(σ, χ) = Σ_p χ(p) p^{-σ} + B(σ)` for real `σ > 1`.
pub fn verify_log_decomposition(
    w: &DirichletWeight,
    sigma: f64,
    limits: DecompositionLimits,
) -> Result<DecompositionReport, LfunError> {
    if !(sigma > 1.0) || !sigma.is_finite() {
        return Err(LfunError::Domain { operation: "verify_log_decomposition", requirement: "sigma > 1", sigma });
    }
    let l = l_value(w, sigma, limits.n_trunc)?;
    let log_l = l.ln().ok_or(LfunError::LogDomain { value: l.value, radius: l.radius })?;
    let prime_sum = prime_sum(w, sigma, limits.prime_limit)?;
    let b_value = b_function(w, sigma, limits.prime_limit, limits.m_max)?;
    let residual = log_l.value - prime_sum.value - b_value.value;
    Ok(DecompositionReport { sigma, log_l, prime_sum, b_value, residual })
}
