//! Weighted prime races `A(x) = Σ_{p<=x} w(p) p^{-σ}`.
//!
//! The race is a prefix sum over primes. Segments are sieved and their terms
//! computed on worker threads; a single reducer on the calling thread folds
//! the terms in ascending order, records checkpoints and tracks the
//! effective sign. Because the reduction order never depends on the worker
//! count, results are bit-identical for any number of workers.

use serde::Serialize;
use thiserror::Error;

use crate::characters::DirichletWeight;
use crate::dd::{DoubleDouble, DD_FN_REL_ERROR};
use crate::sieve::{Sieve, DEFAULT_SEGMENT_SIZE};
use crate::summation::{CompensatedSum, UNIT_ROUNDOFF};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RaceError {
    #[error("sigma = {0} is outside [0, 1]")]
    SigmaOutOfRange(f64),
    #[error("checkpoint {checkpoint} exceeds x_max = {x_max}")]
    CheckpointBeyondMax { checkpoint: u64, x_max: u64 },
    #[error("checkpoints must be ascending ({prev} then {next})")]
    CheckpointsNotAscending { prev: u64, next: u64 },
    #[error("series was computed without per-prime sign tracking")]
    NoSignTracking,
}

/// Arithmetic used for the per-prime terms and the running sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionMode {
    /// `f64` terms with compensated summation.
    #[default]
    Standard,
    /// Double-double terms and accumulation.
    Oracle,
}

#[derive(Debug, Clone)]
pub struct RaceOptions {
    pub workers: usize,
    pub precision: PrecisionMode,
    pub segment_size: u64,
    pub track_signs: bool,
}

impl Default for RaceOptions {
    fn default() -> Self {
        Self { workers: 1, precision: PrecisionMode::Standard, segment_size: DEFAULT_SEGMENT_SIZE, track_signs: true }
    }
}

/// `A(x)` with its floating-point error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RacePoint {
    pub x: u64,
    pub value: f64,
    pub error: f64,
    /// Sign of `A(x)`, or the last nonzero sign when `A(x) = 0`.
    pub effective_sign: i8,
    /// `Σ_{p<=x} |w(p)| p^{-σ}`; differences bound how far `A` can move.
    pub abs_sum: f64,
}

#[derive(Debug, Clone)]
pub struct RaceSeries {
    pub weight: DirichletWeight,
    pub sigma: f64,
    pub x_max: u64,
    pub checkpoints: Vec<u64>,
    /// One entry per checkpoint, in order.
    pub values: Vec<RacePoint>,
    /// `A(x_max)`.
    pub last: RacePoint,
    /// Error bound at `x_max`; never decreases along the race.
    pub running_error: f64,
    pub prime_count: u64,
    /// Every prime where the effective sign differs from the previous prime.
    pub sign_transitions: Option<Vec<RacePoint>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignChangeReport {
    pub change_count: u64,
    pub change_locations: Vec<u64>,
    pub final_sign: i8,
    pub first_positive_x: Option<u64>,
    pub ambiguous_count: u64,
}

/// Sign bookkeeping under the last-nonzero-sign convention.
#[derive(Debug, Clone, Default)]
pub struct SignTracker {
    effective: i8,
    change_locations: Vec<u64>,
    ambiguous: u64,
    first_positive: Option<u64>,
}

impl SignTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn effective_sign(&self) -> i8 {
        self.effective
    }

    /// Feed `A(x)`; returns true when the effective sign changed (including
    /// the first move away from 0, which is not counted as a sign change).
    pub fn observe(&mut self, x: u64, value: f64, error: f64) -> bool {
        let sign = if value > 0.0 {
            1
        } else if value < 0.0 {
            -1
        } else {
            return false;
        };
        if sign == self.effective {
            return false;
        }
        if self.effective != 0 {
            self.change_locations.push(x);
            if value.abs() <= error {
                self.ambiguous += 1;
            }
        }
        if sign > 0 && self.first_positive.is_none() {
            self.first_positive = Some(x);
        }
        self.effective = sign;
        true
    }

    pub fn report(self) -> SignChangeReport {
        SignChangeReport {
            change_count: self.change_locations.len() as u64,
            change_locations: self.change_locations,
            final_sign: self.effective,
            first_positive_x: self.first_positive,
            ambiguous_count: self.ambiguous,
        }
    }
}

/// Sign-change report for an explicit sequence of race points.
pub fn sign_changes_in<I: IntoIterator<Item = RacePoint>>(points: I) -> SignChangeReport {
    let mut tracker = SignTracker::new();
    for pt in points {
        tracker.observe(pt.x, pt.value, pt.error);
    }
    tracker.report()
}

/// Default checkpoints: `round(10^{k/16})` for `k >= 0`, every power of ten,
/// and `x_max` itself, ascending without duplicates.
pub fn geometric_checkpoints(x_max: u64) -> Vec<u64> {
    let mut pts = Vec::new();
    let mut k = 0i32;
    loop {
        let v = 10f64.powf(k as f64 / 16.0).round();
        if v > x_max as f64 {
            break;
        }
        pts.push(v as u64);
        k += 1;
    }
    let mut p = 1u64;
    while p <= x_max {
        pts.push(p);
        match p.checked_mul(10) {
            Some(n) => p = n,
            None => break,
        }
    }
    if x_max >= 1 {
        pts.push(x_max);
    }
    pts.sort_unstable();
    pts.dedup();
    pts
}

fn validate(sigma: f64, x_max: u64, checkpoints: &[u64]) -> Result<(), RaceError> {
    if !(0.0..=1.0).contains(&sigma) {
        return Err(RaceError::SigmaOutOfRange(sigma));
    }
    for pair in checkpoints.windows(2) {
        if pair[1] < pair[0] {
            return Err(RaceError::CheckpointsNotAscending { prev: pair[0], next: pair[1] });
        }
    }
    if let Some(&last) = checkpoints.last() {
        if last > x_max {
            return Err(RaceError::CheckpointBeyondMax { checkpoint: last, x_max });
        }
    }
    Ok(())
}

/// Race with default options (one worker, standard precision, sign tracking on).
pub fn weighted_race(
    w: &DirichletWeight,
    sigma: f64,
    x_max: u64,
    checkpoints: &[u64],
) -> Result<RaceSeries, RaceError> {
    weighted_race_with(w, sigma, x_max, checkpoints, &RaceOptions::default())
}

/// `A(x)` at each of `points` (ascending).
pub fn race_at_points(w: &DirichletWeight, sigma: f64, points: &[u64]) -> Result<Vec<RacePoint>, RaceError> {
    race_at_points_with(w, sigma, points, &RaceOptions { track_signs: false, ..RaceOptions::default() })
}

pub fn race_at_points_with(
    w: &DirichletWeight,
    sigma: f64,
    points: &[u64],
    opts: &RaceOptions,
) -> Result<Vec<RacePoint>, RaceError> {
    let x_max = points.last().copied().unwrap_or(0);
    Ok(weighted_race_with(w, sigma, x_max, points, opts)?.values)
}

/// Accumulator for the two precision modes.
enum Accumulator {
    Standard(CompensatedSum),
    Oracle { sum: DoubleDouble, abs_sum: f64, count: u64 },
}

impl Accumulator {
    fn new(mode: PrecisionMode, exact_terms: bool) -> Self {
        match mode {
            PrecisionMode::Standard if exact_terms => Self::Standard(CompensatedSum::exact_terms()),
            PrecisionMode::Standard => Self::Standard(CompensatedSum::default()),
            PrecisionMode::Oracle => Self::Oracle { sum: DoubleDouble::ZERO, abs_sum: 0.0, count: 0 },
        }
    }

    #[inline]
    fn add(&mut self, t: Term) {
        match (self, t) {
            (Self::Standard(s), Term::F64(v)) => s.add(v),
            (Self::Oracle { sum, abs_sum, count }, Term::Dd(v)) => {
                *sum = *sum + v;
                *abs_sum += v.hi.abs();
                *count += 1;
            }
            _ => unreachable!("term kind matches precision mode"),
        }
    }

    fn point(&self, x: u64, effective_sign: i8) -> RacePoint {
        match self {
            Self::Standard(s) => {
                RacePoint { x, value: s.value(), error: s.error_bound(), effective_sign, abs_sum: s.abs_sum() }
            }
            Self::Oracle { sum, abs_sum, count } => {
                let value = sum.to_f64();
                let n = *count as f64;
                let abs_sum = abs_sum * (1.0 + 2.0 * n * UNIT_ROUNDOFF);
                // per-term function error, double-double accumulation, final rounding to f64
                let dd_u = UNIT_ROUNDOFF * UNIT_ROUNDOFF;
                let error = (DD_FN_REL_ERROR + 4.0 * n * dd_u) * abs_sum + UNIT_ROUNDOFF * abs_sum;
                RacePoint { x, value, error, effective_sign, abs_sum }
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Term {
    F64(f64),
    Dd(DoubleDouble),
}

#[inline]
fn term(weight: f64, p: u64, sigma: f64, mode: PrecisionMode) -> Term {
    match mode {
        PrecisionMode::Standard => {
            if sigma == 0.0 {
                Term::F64(weight)
            } else {
                Term::F64(weight * (p as f64).powf(-sigma))
            }
        }
        PrecisionMode::Oracle => {
            if sigma == 0.0 {
                return Term::Dd(DoubleDouble::from(weight));
            }
            let pd = DoubleDouble::from_u64(p);
            let scaled = if sigma == 0.5 {
                DoubleDouble::ONE / pd.sqrt()
            } else if sigma == 1.0 {
                DoubleDouble::ONE / pd
            } else {
                (-(pd.ln().mul_f64(sigma))).exp()
            };
            Term::Dd(scaled.mul_f64(weight))
        }
    }
}

/// Stream `A(x)` up to `x_max`, recording every checkpoint and, when
/// requested, every prime where the effective sign flips.
pub fn weighted_race_with(
    w: &DirichletWeight,
    sigma: f64,
    x_max: u64,
    checkpoints: &[u64],
    opts: &RaceOptions,
) -> Result<RaceSeries, RaceError> {
    validate(sigma, x_max, checkpoints)?;
    let exact_terms = sigma == 0.0 && w.is_integral();
    let mut acc = Accumulator::new(opts.precision, exact_terms);
    let mut tracker = SignTracker::new();
    let mut transitions = opts.track_signs.then(Vec::new);
    let mut values = Vec::with_capacity(checkpoints.len());
    let mut next_cp = 0usize;
    let mut prime_count = 0u64;

    if x_max >= 2 {
        let sieve = Sieve::with_segment_size(x_max, opts.segment_size.max(64) & !1)
            .expect("segment size normalized to an even value >= 64");
        let mode = opts.precision;
        sieve.map_segments_ordered(
            opts.workers,
            |seg| {
                let n = seg.primes.len() as u64;
                let terms: Vec<(u64, Term)> = seg
                    .primes
                    .iter()
                    .filter_map(|&p| {
                        let wp = w.at_prime(p);
                        (wp != 0.0).then(|| (p, term(wp, p, sigma, mode)))
                    })
                    .collect();
                (n, terms)
            },
            |(n, terms)| {
                prime_count += n;
                for (p, t) in terms {
                    while next_cp < checkpoints.len() && checkpoints[next_cp] < p {
                        values.push(acc.point(checkpoints[next_cp], tracker.effective_sign()));
                        next_cp += 1;
                    }
                    acc.add(t);
                    let pt = acc.point(p, 0);
                    if tracker.observe(p, pt.value, pt.error) {
                        if let Some(tr) = transitions.as_mut() {
                            tr.push(RacePoint { effective_sign: tracker.effective_sign(), ..pt });
                        }
                    }
                }
            },
        );
    }
    let sign = tracker.effective_sign();
    while next_cp < checkpoints.len() {
        values.push(acc.point(checkpoints[next_cp], sign));
        next_cp += 1;
    }
    let last = acc.point(x_max, sign);
    Ok(RaceSeries {
        weight: w.clone(),
        sigma,
        x_max,
        checkpoints: checkpoints.to_vec(),
        values,
        running_error: last.error,
        last,
        prime_count,
        sign_transitions: transitions,
    })
}

/// Sign changes of a race, replayed from its recorded transitions.
pub fn detect_sign_changes(series: &RaceSeries) -> Result<SignChangeReport, RaceError> {
    let transitions = series.sign_transitions.as_ref().ok_or(RaceError::NoSignTracking)?;
    Ok(sign_changes_in(transitions.iter().copied()))
}
