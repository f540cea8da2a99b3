//! Reference computations that share no code with `primerace`: trial
//! division, exact integer races and alternating-series L-values.

/// Primes up to `limit` by trial division.
pub fn trial_division_primes(limit: u64) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::new();
    for n in 2..=limit {
        if primes.iter().take_while(|&&p| p * p <= n).all(|&p| n % p != 0) {
            primes.push(n);
        }
    }
    primes
}

/// χ₄ by residue.
pub fn chi4(n: u64) -> i64 {
    match n % 4 {
        1 => 1,
        3 => -1,
        _ => 0,
    }
}

/// `(p, Σ_{q<=p} χ₄(q))` for every prime `p <= limit`, in exact integers.
pub fn exact_chi4_race(limit: u64) -> Vec<(u64, i64)> {
    let mut acc = 0i64;
    trial_division_primes(limit)
        .into_iter()
        .map(|p| {
            acc += chi4(p);
            (p, acc)
        })
        .collect()
}

/// Sign changes of an integer sequence, ignoring zeros (a zero keeps the
/// previous sign).
pub fn integer_sign_changes(values: impl IntoIterator<Item = (u64, i64)>) -> Vec<u64> {
    let mut last = 0i64;
    let mut out = Vec::new();
    for (x, v) in values {
        let s = v.signum();
        if s != 0 {
            if last != 0 && s != last {
                out.push(x);
            }
            last = s;
        }
    }
    out
}

/// `Σ_{k>=0} (-1)^k (2k+1)^{-σ}` from `terms` terms, as `(value, radius)`.
///
/// The terms are completely monotone in `k`, so the limit lies between
/// consecutive partial sums; their mean is off by at most half the next
/// term difference. The radius adds `(5u + n u²) Σ|t|` for compensated
/// summation and a 2 ulp allowance on each `powf` term.
pub fn alternating_series(sigma: f64, terms: u64) -> (f64, f64) {
    assert!(terms >= 2);
    let a = |k: u64| ((2 * k + 1) as f64).powf(-sigma);
    let (mut s, mut c) = (0.0f64, 0.0f64);
    let mut prev = 0.0;
    let mut abs_sum = 0.0;
    for k in 0..terms {
        prev = s - c;
        let t = if k % 2 == 0 { a(k) } else { -a(k) };
        abs_sum += t.abs();
        let y = t - c;
        let z = s + y;
        c = (z - s) - y;
        s = z;
    }
    let last = s - c;
    let value = 0.5 * (prev + last);
    let u = f64::EPSILON / 2.0;
    let n = terms as f64;
    let radius = 0.5 * (a(terms - 1) - a(terms)) + (5.0 * u + n * u * u) * abs_sum * (1.0 + 1e-6);
    (value, radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(trial_division_primes(30), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert_eq!(exact_chi4_race(10), vec![(2, 0), (3, -1), (5, 0), (7, -1)]);
        assert_eq!(integer_sign_changes([(1, 2), (2, 1), (3, -1), (4, 0), (5, 3)]), vec![3, 5]);
        let (v, r) = alternating_series(1.0, 1_000_000);
        assert!((v - std::f64::consts::FRAC_PI_4).abs() <= r);
        assert!(r < 1e-12);
    }
}
