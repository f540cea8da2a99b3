//! Real Dirichlet characters and bounded completely multiplicative weights.
//!
//! A character is always stored as its period table, whatever spec it was
//! built from, so evaluation in the race loop is one modular lookup.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::sieve::isqrt;

/// Largest `n` that a general multiplicative weight will factor by trial division.
pub const DEFAULT_FACTOR_LIMIT: u64 = 1 << 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CharacterError {
    #[error("character table needs modulus >= 3 and exactly q values (q = {q}, got {len})")]
    BadTable { q: u64, len: usize },
    #[error("character value {value} at n = {n} is not in {{-1, 0, 1}}")]
    BadValue { n: u64, value: i64 },
    #[error("character must satisfy w(1) = 1")]
    NotUnital,
    #[error("w({n}) = {value} but gcd({n}, {q}) = {gcd}")]
    GcdRule { n: u64, q: u64, gcd: u64, value: i8 },
    #[error("principal character rejected: non-principal required")]
    Principal,
    #[error("period sum is {0}, expected 0 for a non-principal character")]
    NonZeroPeriodSum(i64),
    #[error("multiplicativity fails at (m, n) = ({m}, {n})")]
    NotMultiplicative { m: u64, n: u64 },
    #[error("{0} is not a fundamental discriminant with |d| >= 3")]
    NotFundamental(i64),
    #[error("weight value {value} at prime {p} is outside [-1, 1]")]
    OutOfRange { p: u64, value: f64 },
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("cannot factor {n}: above the factorization limit {limit}")]
    FactorLimit { n: u64, limit: u64 },
    #[error("weight_at requires n >= 1")]
    ZeroArgument,
    #[error("partial character sums are only defined for character kinds")]
    Unsupported,
    #[error("cannot parse weight spec {spec:?}: {reason}")]
    Parse { spec: String, reason: String },
}

/// How a character was specified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CharacterSource {
    Table,
    Kronecker(i64),
}

/// A real non-principal Dirichlet character, stored as its period table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Character {
    modulus: u64,
    table: Vec<i8>,
    source: CharacterSource,
}

/// A real completely multiplicative function given by its values at primes.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicativeWeight {
    prime_values: BTreeMap<u64, f64>,
    default_value: f64,
    factor_limit: u64,
}

/// Arithmetic weight fed to races and L-function routines.
#[derive(Debug, Clone, PartialEq)]
pub enum DirichletWeight {
    Character(Character),
    Multiplicative(MultiplicativeWeight),
}

/// Declarative description of a weight, as written in configs and on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    /// `table:<q>:<v0,v1,...>` with values indexed by residue `0..q`.
    Table { q: u64, values: Vec<i64> },
    /// `kronecker:<d>`
    Kronecker(i64),
    /// `multiplicative:<p>=<v>,...[;default=<v>]`
    Multiplicative { prime_values: Vec<(u64, f64)>, default_value: f64 },
}

/// The real non-principal character mod 4.
pub fn chi4() -> DirichletWeight {
    DirichletWeight::Character(Character { modulus: 4, table: vec![0, 1, 0, -1], source: CharacterSource::Table })
}

/// Kronecker symbol `(d / n)`.
pub fn kronecker_symbol(d: i64, n: u64) -> i8 {
    if n == 0 {
        return if d == 1 || d == -1 { 1 } else { 0 };
    }
    let mut a = d as i128;
    let mut b = n as i128;
    // strip factors of 2 from n using (a/2)
    let v = b.trailing_zeros();
    if v > 0 && a % 2 == 0 {
        return 0;
    }
    b >>= v;
    let mut k: i8 = 1;
    if v % 2 == 1 {
        let r = a.rem_euclid(8);
        if r == 3 || r == 5 {
            k = -k;
        }
    }
    // Jacobi symbol (a/b) for odd b > 0
    a = a.rem_euclid(b);
    while a != 0 {
        let v = a.trailing_zeros();
        a >>= v;
        let r = b % 8;
        if v % 2 == 1 && (r == 3 || r == 5) {
            k = -k;
        }
        if a % 4 == 3 && b % 4 == 3 {
            k = -k;
        }
        std::mem::swap(&mut a, &mut b);
        a %= b;
    }
    if b == 1 {
        k
    } else {
        0
    }
}

/// Fundamental discriminant test: `d ≡ 1 (mod 4)` squarefree, or
/// `d = 4m` with `m ≡ 2, 3 (mod 4)` squarefree.
pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d == 0 || d == 1 {
        return false;
    }
    match d.rem_euclid(4) {
        1 => is_squarefree(d.unsigned_abs()),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && is_squarefree(m.unsigned_abs())
        }
        _ => false,
    }
}

fn is_squarefree(n: u64) -> bool {
    let mut n = n;
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return false;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    true
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Build a character from a table or Kronecker spec, verifying every axiom.
pub fn build_character(spec: &WeightSpec) -> Result<DirichletWeight, CharacterError> {
    match spec {
        WeightSpec::Table { q, values } => {
            if *q < 3 || values.len() as u64 != *q {
                return Err(CharacterError::BadTable { q: *q, len: values.len() });
            }
            let mut table = Vec::with_capacity(values.len());
            for (n, &v) in values.iter().enumerate() {
                if !(-1..=1).contains(&v) {
                    return Err(CharacterError::BadValue { n: n as u64, value: v });
                }
                table.push(v as i8);
            }
            Character::verified(*q, table, CharacterSource::Table).map(DirichletWeight::Character)
        }
        WeightSpec::Kronecker(d) => {
            if d.unsigned_abs() < 3 || !is_fundamental_discriminant(*d) {
                return Err(CharacterError::NotFundamental(*d));
            }
            let q = d.unsigned_abs();
            let table = (0..q).map(|n| kronecker_symbol(*d, n)).collect();
            Character::verified(q, table, CharacterSource::Kronecker(*d)).map(DirichletWeight::Character)
        }
        WeightSpec::Multiplicative { prime_values, default_value } => {
            MultiplicativeWeight::new(prime_values.iter().copied(), *default_value).map(DirichletWeight::Multiplicative)
        }
    }
}

impl Character {
    fn verified(modulus: u64, table: Vec<i8>, source: CharacterSource) -> Result<Self, CharacterError> {
        let q = modulus;
        if table[1 % q as usize] != 1 {
            return Err(CharacterError::NotUnital);
        }
        for n in 0..q {
            let value = table[n as usize];
            let g = gcd(n, q);
            if (g > 1) != (value == 0) {
                return Err(CharacterError::GcdRule { n, q, gcd: g, value });
            }
        }
        if (1..q).all(|n| table[n as usize] != -1) {
            return Err(CharacterError::Principal);
        }
        let period_sum: i64 = table.iter().map(|&v| v as i64).sum();
        if period_sum != 0 {
            return Err(CharacterError::NonZeroPeriodSum(period_sum));
        }
        // Given periodicity, w(mn) = w(m) w(n) for all m, n iff it holds on a
        // complete residue system, so 1..=q x 1..=q covers every case.
        for m in 1..=q {
            let wm = table[(m % q) as usize];
            for n in m..=q {
                let wn = table[(n % q) as usize];
                if table[((m * n) % q) as usize] != wm * wn {
                    return Err(CharacterError::NotMultiplicative { m, n });
                }
            }
        }
        Ok(Self { modulus, table, source })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn source(&self) -> &CharacterSource {
        &self.source
    }

    /// Values on residues `0..q`.
    pub fn period(&self) -> &[i8] {
        &self.table
    }

    #[inline]
    pub fn at(&self, n: u64) -> i8 {
        self.table[(n % self.modulus) as usize]
    }

    /// `S(x) = Σ_{n<=x} χ(n)` in exact integers.
    pub fn partial_sum(&self, x: u64) -> i64 {
        let q = self.modulus;
        // whole periods sum to zero
        let r = x % q;
        let s: i64 = self.table[1..=(r as usize)].iter().map(|&v| v as i64).sum();
        debug_assert!(s.unsigned_abs() <= q);
        s
    }
}

impl MultiplicativeWeight {
    pub fn new(prime_values: impl IntoIterator<Item = (u64, f64)>, default_value: f64) -> Result<Self, CharacterError> {
        if !(-1.0..=1.0).contains(&default_value) {
            return Err(CharacterError::OutOfRange { p: 0, value: default_value });
        }
        let mut map = BTreeMap::new();
        for (p, v) in prime_values {
            if !is_prime_trial(p) {
                return Err(CharacterError::NotPrime(p));
            }
            if !(-1.0..=1.0).contains(&v) {
                return Err(CharacterError::OutOfRange { p, value: v });
            }
            map.insert(p, v);
        }
        Ok(Self { prime_values: map, default_value, factor_limit: DEFAULT_FACTOR_LIMIT })
    }

    pub fn with_factor_limit(mut self, limit: u64) -> Self {
        self.factor_limit = limit;
        self
    }

    pub fn default_value(&self) -> f64 {
        self.default_value
    }

    pub fn prime_values(&self) -> &BTreeMap<u64, f64> {
        &self.prime_values
    }

    #[inline]
    pub fn at_prime(&self, p: u64) -> f64 {
        self.prime_values.get(&p).copied().unwrap_or(self.default_value)
    }

    /// Value at `n` from its prime factorization.
    pub fn at(&self, n: u64) -> Result<f64, CharacterError> {
        if n == 0 {
            return Err(CharacterError::ZeroArgument);
        }
        if n > self.factor_limit {
            return Err(CharacterError::FactorLimit { n, limit: self.factor_limit });
        }
        let mut rest = n;
        let mut value = 1.0;
        let mut p = 2u64;
        while p * p <= rest {
            while rest.is_multiple_of(p) {
                value *= self.at_prime(p);
                rest /= p;
            }
            p += if p == 2 { 1 } else { 2 };
        }
        if rest > 1 {
            value *= self.at_prime(rest);
        }
        Ok(value)
    }
}

fn is_prime_trial(n: u64) -> bool {
    n >= 2 && (2..=isqrt(n)).all(|d| !n.is_multiple_of(d))
}

impl DirichletWeight {
    /// Modulus for character kinds, 0 for general weights.
    pub fn modulus(&self) -> u64 {
        match self {
            Self::Character(c) => c.modulus,
            Self::Multiplicative(_) => 0,
        }
    }

    pub fn as_character(&self) -> Option<&Character> {
        match self {
            Self::Character(c) => Some(c),
            Self::Multiplicative(_) => None,
        }
    }

    /// Value at a prime; no factorization needed.
    #[inline]
    pub fn at_prime(&self, p: u64) -> f64 {
        match self {
            Self::Character(c) => c.at(p) as f64,
            Self::Multiplicative(f) => f.at_prime(p),
        }
    }

    /// True when every value lies in {-1, 0, 1}.
    pub fn is_integral(&self) -> bool {
        matches!(self, Self::Character(_))
    }
}

/// `w(n)` for `n >= 1`.
pub fn weight_at(w: &DirichletWeight, n: u64) -> Result<f64, CharacterError> {
    if n == 0 {
        return Err(CharacterError::ZeroArgument);
    }
    match w {
        DirichletWeight::Character(c) => Ok(c.at(n) as f64),
        DirichletWeight::Multiplicative(f) => f.at(n),
    }
}

/// `Σ_{n<=x} w(n)` for character kinds.
pub fn partial_character_sum(w: &DirichletWeight, x: u64) -> Result<i64, CharacterError> {
    match w {
        DirichletWeight::Character(c) => Ok(c.partial_sum(x)),
        DirichletWeight::Multiplicative(_) => Err(CharacterError::Unsupported),
    }
}

impl FromStr for WeightSpec {
    type Err = CharacterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| CharacterError::Parse { spec: s.to_string(), reason: reason.to_string() };
        let s_trim = s.trim();
        let (kind, rest) = s_trim.split_once(':').ok_or_else(|| err("expected <kind>:<args>"))?;
        match kind {
            "kronecker" => rest.trim().parse().map(WeightSpec::Kronecker).map_err(|_| err("bad discriminant")),
            "table" => {
                let (q, vals) = rest.split_once(':').ok_or_else(|| err("expected table:<q>:<values>"))?;
                let q = q.trim().parse().map_err(|_| err("bad modulus"))?;
                let values = vals
                    .split(',')
                    .map(|v| v.trim().parse::<i64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| err("bad table value"))?;
                Ok(WeightSpec::Table { q, values })
            }
            "multiplicative" => {
                let (pairs, default) = match rest.split_once(';') {
                    Some((pairs, tail)) => {
                        let d = tail.trim().strip_prefix("default=").ok_or_else(|| err("expected default=<v>"))?;
                        (pairs, d.trim().parse().map_err(|_| err("bad default value"))?)
                    }
                    None => (rest, 0.0),
                };
                let mut prime_values = Vec::new();
                for pair in pairs.split(',').filter(|p| !p.trim().is_empty()) {
                    let (p, v) = pair.split_once('=').ok_or_else(|| err("expected <p>=<v>"))?;
                    let p = p.trim().parse().map_err(|_| err("bad prime"))?;
                    let v = v.trim().parse().map_err(|_| err("bad value"))?;
                    prime_values.push((p, v));
                }
                Ok(WeightSpec::Multiplicative { prime_values, default_value: default })
            }
            _ => Err(err("unknown kind; use kronecker, table or multiplicative")),
        }
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::Kronecker(d) => write!(f, "kronecker:{d}"),
            WeightSpec::Table { q, values } => {
                let vals: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                write!(f, "table:{q}:{}", vals.join(","))
            }
            WeightSpec::Multiplicative { prime_values, default_value } => {
                let pairs: Vec<String> = prime_values.iter().map(|(p, v)| format!("{p}={v}")).collect();
                write!(f, "multiplicative:{};default={default_value}", pairs.join(","))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn legendre_euler(a: i64, p: u64) -> i8 {
        // Euler's criterion a^((p-1)/2) mod p, p an odd prime
        let m = p as u128;
        let mut base = (a.rem_euclid(p as i64)) as u128;
        let mut e = (p - 1) / 2;
        let mut acc = 1u128;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % m;
            }
            base = base * base % m;
            e >>= 1;
        }
        match acc {
            0 => 0,
            1 => 1,
            _ => -1,
        }
    }

    #[test]
    fn chi4_values() {
        let w = chi4();
        assert_eq!(weight_at(&w, 1).unwrap(), 1.0);
        assert_eq!(weight_at(&w, 3).unwrap(), -1.0);
        assert_eq!(weight_at(&w, 2).unwrap(), 0.0);
        assert_eq!(weight_at(&w, 15).unwrap(), -1.0);
        assert_eq!(weight_at(&w, 0), Err(CharacterError::ZeroArgument));
    }

    #[test]
    fn kronecker_basics() {
        assert_eq!(kronecker_symbol(-4, 3), -1);
        assert_eq!(kronecker_symbol(5, 5), 0);
        for d in [-8, -4, -3, 5, 8, 12, 7, -1000] {
            assert_eq!(kronecker_symbol(d, 1), 1);
        }
        // (d/2) rule
        assert_eq!(kronecker_symbol(5, 2), -1);
        assert_eq!(kronecker_symbol(-7, 2), 1);
        assert_eq!(kronecker_symbol(12, 2), 0);
    }

    #[test]
    fn kronecker_matches_euler_criterion_at_odd_primes() {
        let primes: Vec<u64> = (3..2000).filter(|&n| is_prime_trial(n)).collect();
        for d in [-20i64, -8, -4, -3, 5, 8, 12, 13, 1001] {
            for &p in &primes {
                assert_eq!(kronecker_symbol(d, p), legendre_euler(d, p), "d = {d}, p = {p}");
            }
        }
    }

    #[test]
    fn fundamental_discriminants() {
        for d in [-4, -3, 5, 8, -8, 12, -7, 13, -20, 24] {
            assert!(is_fundamental_discriminant(d), "{d}");
        }
        for d in [0, 1, 4, -1, 9, 16, -12, 2, 3, 20, 45] {
            assert!(!is_fundamental_discriminant(d), "{d}");
        }
    }

    #[test]
    fn build_from_table_and_kronecker() {
        let t = build_character(&WeightSpec::Table { q: 4, values: vec![0, 1, 0, -1] }).unwrap();
        let k = build_character(&WeightSpec::Kronecker(-4)).unwrap();
        for n in 1..=1000 {
            assert_eq!(weight_at(&t, n).unwrap(), weight_at(&chi4(), n).unwrap());
            assert_eq!(weight_at(&k, n).unwrap(), weight_at(&chi4(), n).unwrap());
        }
    }

    #[test]
    fn build_rejections() {
        assert_eq!(
            build_character(&WeightSpec::Table { q: 4, values: vec![0, 1, 0, 1] }),
            Err(CharacterError::Principal)
        );
        assert!(matches!(
            build_character(&WeightSpec::Table { q: 4, values: vec![0, 1, 0] }),
            Err(CharacterError::BadTable { .. })
        ));
        assert!(matches!(
            build_character(&WeightSpec::Table { q: 4, values: vec![0, 2, 0, -1] }),
            Err(CharacterError::BadValue { .. })
        ));
        // balanced mod 5 table with χ(2)^2 != χ(4)
        assert_eq!(
            build_character(&WeightSpec::Table { q: 5, values: vec![0, 1, 1, -1, -1] }),
            Err(CharacterError::NotMultiplicative { m: 2, n: 2 })
        );
        assert_eq!(
            build_character(&WeightSpec::Table { q: 5, values: vec![0, -1, 1, 1, -1] }),
            Err(CharacterError::NotUnital)
        );
        assert!(matches!(
            build_character(&WeightSpec::Table { q: 6, values: vec![0, 1, 1, 0, 0, -1] }),
            Err(CharacterError::GcdRule { n: 2, .. })
        ));
        assert_eq!(build_character(&WeightSpec::Kronecker(-12)), Err(CharacterError::NotFundamental(-12)));
        assert_eq!(build_character(&WeightSpec::Kronecker(1)), Err(CharacterError::NotFundamental(1)));
    }

    #[test]
    fn partial_sums() {
        let w = chi4();
        assert_eq!(partial_character_sum(&w, 0).unwrap(), 0);
        assert_eq!(partial_character_sum(&w, 3).unwrap(), 0);
        assert_eq!(partial_character_sum(&w, 4).unwrap(), 0);
        assert_eq!(partial_character_sum(&w, 5).unwrap(), 1);
        let f = build_character(&WeightSpec::Multiplicative { prime_values: vec![(2, -1.0)], default_value: 0.0 }).unwrap();
        assert_eq!(partial_character_sum(&f, 10), Err(CharacterError::Unsupported));
    }

    #[test]
    fn general_multiplicative() {
        let f = build_character(&WeightSpec::Multiplicative { prime_values: vec![(2, -1.0), (3, 0.5)], default_value: 0.0 })
            .unwrap();
        assert_eq!(weight_at(&f, 8).unwrap(), -1.0);
        assert_eq!(weight_at(&f, 12).unwrap(), 0.5);
        assert_eq!(weight_at(&f, 5).unwrap(), 0.0);
        assert_eq!(weight_at(&f, 1).unwrap(), 1.0);
        assert_eq!(f.modulus(), 0);
        let DirichletWeight::Multiplicative(m) = f else { unreachable!() };
        let m = DirichletWeight::Multiplicative(m.with_factor_limit(100));
        assert_eq!(weight_at(&m, 101), Err(CharacterError::FactorLimit { n: 101, limit: 100 }));
        assert!(matches!(
            MultiplicativeWeight::new([(4, 0.5)], 0.0),
            Err(CharacterError::NotPrime(4))
        ));
        assert!(matches!(
            MultiplicativeWeight::new([(5, 1.5)], 0.0),
            Err(CharacterError::OutOfRange { p: 5, .. })
        ));
    }

    #[test]
    fn spec_strings_roundtrip() {
        for s in ["kronecker:-4", "table:4:0,1,0,-1", "multiplicative:2=-1,3=0.5;default=-0.25"] {
            let spec: WeightSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("kron:-4".parse::<WeightSpec>().is_err());
        assert!("table:4:0,1,x".parse::<WeightSpec>().is_err());
    }
}
