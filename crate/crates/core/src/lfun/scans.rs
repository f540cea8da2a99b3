//! Grid scans over `σ` and `x`. Rows are computed in parallel but always
//! returned in input order.

use rayon::prelude::*;
use serde::Serialize;

use super::{l_value, BoundedValue, LfunError, DEFAULT_N_TRUNC};
use crate::characters::{chi4, DirichletWeight};
use crate::races::{race_at_points_with, PrecisionMode, RaceOptions, RacePoint};
use crate::summation::UNIT_ROUNDOFF;

/// Largest `x` the conjecture scan accepts by default.
pub const DEFAULT_CONJECTURE_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub workers: usize,
    pub n_trunc: u64,
    pub precision: PrecisionMode,
    pub budget: u64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { workers: 1, n_trunc: DEFAULT_N_TRUNC, precision: PrecisionMode::Standard, budget: DEFAULT_CONJECTURE_BUDGET }
    }
}

impl ScanOptions {
    fn race_options(&self, workers: usize) -> RaceOptions {
        RaceOptions { workers, precision: self.precision, track_signs: false, ..RaceOptions::default() }
    }

    fn pool(&self) -> rayon::ThreadPool {
        rayon::ThreadPoolBuilder::new().num_threads(self.workers.max(1)).build().expect("failed to build scan thread pool")
    }
}

/// One grid point of the bias-bound scan:
/// `R(σ) = log L(σ, χ) - A(x_max) - ½ log(1/(2σ-1))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasRow {
    pub sigma: f64,
    pub x_max: u64,
    /// `A(x_max)` at this `σ`; a truncated sum, not a limit.
    pub race: RacePoint,
    pub half_log: f64,
    pub log_l: Option<BoundedValue>,
    pub r: Option<BoundedValue>,
    /// `Σ_{x_max/2 < p <= x_max} |w(p)| p^{-σ}`: how far the last octave of
    /// primes can move `A`, disclosed alongside the truncation point.
    pub last_octave_bound: f64,
    pub error: Option<String>,
}

/// Evaluate `R(σ)` at every grid point. Grid points outside `(1/2, 1]` are
/// rejected up front; a non-positive L-value is reported on its row.
pub fn bias_bound_scan(
    w: &DirichletWeight,
    sigma_grid: &[f64],
    race_x_max: u64,
    opts: &ScanOptions,
) -> Result<Vec<BiasRow>, LfunError> {
    w.as_character().ok_or(LfunError::NotCharacter { operation: "bias_bound_scan" })?;
    for &sigma in sigma_grid {
        if !(sigma > 0.5 && sigma <= 1.0) {
            return Err(LfunError::Domain { operation: "bias_bound_scan", requirement: "1/2 < sigma <= 1", sigma });
        }
    }
    let row = |sigma: f64| -> Result<BiasRow, LfunError> {
        let half = race_x_max / 2;
        let pts = race_at_points_with(w, sigma, &[half, race_x_max], &opts.race_options(1))?;
        let race = pts[1];
        let last_octave_bound = (pts[1].abs_sum - pts[0].abs_sum).max(0.0) * (1.0 + 4.0 * UNIT_ROUNDOFF);
        let half_log = 0.5 * (1.0 / (2.0 * sigma - 1.0)).ln();
        let l = l_value(w, sigma, opts.n_trunc)?;
        let (log_l, r, error) = match l.ln() {
            Some(log_l) => {
                let value = log_l.value - race.value - half_log;
                let radius = log_l.radius + race.error + 4.0 * UNIT_ROUNDOFF * (log_l.value.abs() + race.value.abs() + half_log.abs());
                (Some(log_l), Some(BoundedValue::new(value, radius)), None)
            }
            None => (None, None, Some(LfunError::LogDomain { value: l.value, radius: l.radius }.to_string())),
        };
        Ok(BiasRow { sigma, x_max: race_x_max, race, half_log, log_l, r, last_octave_bound, error })
    };
    let rows: Vec<Result<BiasRow, LfunError>> = opts.pool().install(|| sigma_grid.par_iter().map(|&s| row(s)).collect());
    rows.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureReport {
    pub rows: Vec<RacePoint>,
    pub min_x: Option<u64>,
    pub min_value: Option<f64>,
    pub final_value: Option<f64>,
    /// Whether every sampled `A(x)` with `x >= 1000` is strictly negative
    /// (vacuously true when no such point was sampled).
    pub all_negative_from_1e3: bool,
    pub negative_count: usize,
    pub positive_count: usize,
}

/// Sample `Σ_{p<=x} χ₄(p)/√p` at the requested points. An observation only;
/// nothing about the limit is inferred.
pub fn conjecture_scan(x_points: &[u64], opts: &ScanOptions) -> Result<ConjectureReport, LfunError> {
    if x_points.windows(2).any(|w| w[1] < w[0]) {
        return Err(LfunError::Unordered);
    }
    if let Some(&max) = x_points.last() {
        if max > opts.budget {
            return Err(LfunError::Budget { max, budget: opts.budget });
        }
    }
    let rows = race_at_points_with(&chi4(), 0.5, x_points, &opts.race_options(opts.workers))?;
    let min = rows.iter().min_by(|a, b| a.value.total_cmp(&b.value));
    Ok(ConjectureReport {
        min_x: min.map(|r| r.x),
        min_value: min.map(|r| r.value),
        final_value: rows.last().map(|r| r.value),
        all_negative_from_1e3: rows.iter().filter(|r| r.x >= 1000).all(|r| r.value < 0.0),
        negative_count: rows.iter().filter(|r| r.value < 0.0).count(),
        positive_count: rows.iter().filter(|r| r.value > 0.0).count(),
        rows,
    })
}
