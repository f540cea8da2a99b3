use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use primerace::characters::{DirichletWeight, WeightSpec};
use primerace::lfun::{
    bias_bound_scan, conjecture_scan, euler_product_value, l_value, mellin_identity_check, verify_log_decomposition,
    BoundedValue, DecompositionLimits, ScanOptions,
};
use primerace::races::{detect_sign_changes, geometric_checkpoints, weighted_race_with, RaceOptions, RacePoint};
use primerace::sieve::Sieve;

use crate::config::{Checkpoints, ExperimentConfig, Task};
use crate::CliError;

pub const WORKERS_ENV: &str = "PRIMERACE_WORKERS";

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub workers: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { workers: 1 }
    }
}

/// Worker count from `PRIMERACE_WORKERS`, else the available parallelism.
pub fn workers_from_env() -> Result<usize, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(CliError::Validation { field: WORKERS_ENV.into(), message: format!("{v:?} is not a positive integer") }),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// A bounded quantity as listed in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusEntry {
    pub quantity: String,
    pub at: String,
    pub value: f64,
    pub radius: f64,
}

impl RadiusEntry {
    fn new(quantity: &str, at: String, b: BoundedValue) -> Self {
        Self { quantity: quantity.to_string(), at, value: b.value, radius: b.radius }
    }

    fn race(p: &RacePoint) -> Self {
        Self::new("A", format!("x={}", p.x), BoundedValue::new(p.value, p.error))
    }
}

/// Everything a task produced, before anything touches the file system.
#[derive(Debug, Clone)]
pub struct Report {
    pub task: Task,
    pub csv: Option<String>,
    pub summary: Value,
    pub radii: Vec<RadiusEntry>,
}

impl Report {
    /// JSON for the summary tasks, CSV for the tabular ones.
    pub fn primary_is_json(&self) -> bool {
        self.csv.is_none() || matches!(self.task, Task::SignChanges | Task::Character)
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: Report,
    pub written: Vec<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub wall_time_seconds: f64,
}

/// `{:.16e}`: 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

struct Table {
    w: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(header).expect("write to memory");
        Self { w }
    }

    fn row(&mut self, fields: &[String]) {
        self.w.write_record(fields).expect("write to memory");
    }

    fn finish(self) -> String {
        String::from_utf8(self.w.into_inner().expect("flush to memory")).expect("csv is utf-8")
    }
}

fn opt_real(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

const RACE_HEADER: [&str; 4] = ["x", "A", "error_bound", "effective_sign"];

fn race_row(p: &RacePoint) -> Vec<String> {
    vec![p.x.to_string(), fmt_real(p.value), fmt_real(p.error), p.effective_sign.to_string()]
}

fn race_table<'a>(rows: impl IntoIterator<Item = &'a RacePoint>) -> String {
    let mut t = Table::new(&RACE_HEADER);
    rows.into_iter().for_each(|p| t.row(&race_row(p)));
    t.finish()
}

fn checkpoints_for(cfg: &ExperimentConfig, x_max: u64) -> Vec<u64> {
    match &cfg.checkpoints {
        Checkpoints::None => vec![],
        Checkpoints::Geometric => geometric_checkpoints(x_max),
        Checkpoints::List(v) => v.clone(),
    }
}

/// Run the computation for a validated config without writing anything.
pub fn execute(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Report, CliError> {
    cfg.validate()?;
    let w = cfg.weight()?;
    let workers = opts.workers.max(1);
    match cfg.task {
        Task::Sieve => sieve(cfg, workers),
        Task::Character => character(cfg, &w),
        Task::Race | Task::SignChanges => race(cfg, &w, workers),
        Task::Lvalue => lvalue(cfg, &w),
        Task::VerifyLemma => verify_lemma(cfg, &w),
        Task::BiasScan => bias_scan(cfg, &w, workers),
        Task::MellinCheck => mellin(cfg, &w),
        Task::Conjecture => conjecture(cfg, workers),
    }
}

fn sieve(cfg: &ExperimentConfig, workers: usize) -> Result<Report, CliError> {
    let limit = cfg.x_max.expect("validated");
    let sieve = Sieve::new(limit);
    let mut count = 0u64;
    let mut table = cfg.emit.then(|| Table::new(&["p"]));
    sieve.map_segments_ordered(
        workers,
        |seg| seg.primes,
        |primes| {
            count += primes.len() as u64;
            if let Some(t) = table.as_mut() {
                primes.iter().for_each(|p| t.row(&[p.to_string()]));
            }
        },
    );
    Ok(Report {
        task: Task::Sieve,
        csv: table.map(Table::finish),
        summary: json!({ "limit": limit, "prime_count": count }),
        radii: vec![],
    })
}

fn character(cfg: &ExperimentConfig, w: &DirichletWeight) -> Result<Report, CliError> {
    let spec: WeightSpec = cfg.character.parse()?;
    let mut summary = json!({ "spec": spec.to_string(), "modulus": w.modulus(), "is_character": w.as_character().is_some() });
    let mut csv = None;
    if let Some(c) = w.as_character() {
        summary["period"] = json!(c.period());
        summary["period_sum"] = json!(c.period().iter().map(|&v| v as i64).sum::<i64>());
        if cfg.emit || cfg.outputs.csv.is_some() {
            let mut t = Table::new(&["n", "value"]);
            c.period().iter().enumerate().for_each(|(n, v)| t.row(&[n.to_string(), v.to_string()]));
            csv = Some(t.finish());
        }
    }
    Ok(Report { task: Task::Character, csv, summary, radii: vec![] })
}

fn race(cfg: &ExperimentConfig, w: &DirichletWeight, workers: usize) -> Result<Report, CliError> {
    let sigma = cfg.sigma.expect("validated");
    let x_max = cfg.x_max.expect("validated");
    let checkpoints = checkpoints_for(cfg, x_max);
    let track = cfg.task == Task::SignChanges;
    let opts = RaceOptions { workers, precision: cfg.precision, track_signs: track, ..RaceOptions::default() };
    let series = weighted_race_with(w, sigma, x_max, &checkpoints, &opts)?;
    let mut rows: Vec<RacePoint> = series.values.clone();
    if rows.last().is_none_or(|p| p.x != x_max) {
        rows.push(series.last);
    }
    let mut summary = json!({
        "character": cfg.character,
        "sigma": sigma,
        "x_max": x_max,
        "prime_count": series.prime_count,
        "value": series.last.value,
        "error_bound": series.last.error,
        "effective_sign": series.last.effective_sign,
    });
    if track {
        let report = detect_sign_changes(&series)?;
        for (k, v) in serde_json::to_value(&report).expect("serializable").as_object().expect("object") {
            summary[k] = v.clone();
        }
        let transitions = series.sign_transitions.as_deref().unwrap_or(&[]);
        return Ok(Report {
            task: Task::SignChanges,
            csv: Some(race_table(transitions)),
            summary,
            radii: vec![RadiusEntry::race(&series.last)],
        });
    }
    Ok(Report { task: Task::Race, csv: Some(race_table(&rows)), summary, radii: rows.iter().map(RadiusEntry::race).collect() })
}

fn lvalue(cfg: &ExperimentConfig, w: &DirichletWeight) -> Result<Report, CliError> {
    let mut t = Table::new(&["sigma", "n_trunc", "value", "radius", "prime_limit", "euler_value", "euler_radius"]);
    let mut radii = Vec::new();
    let mut rows = Vec::new();
    for sigma in cfg.sigma_values()? {
        let l = l_value(w, sigma, cfg.n_trunc)?;
        let e = if sigma > 1.0 { Some(euler_product_value(w, sigma, cfg.prime_limit)?) } else { None };
        t.row(&[
            fmt_real(sigma),
            cfg.n_trunc.to_string(),
            fmt_real(l.value),
            fmt_real(l.radius),
            e.map(|_| cfg.prime_limit.to_string()).unwrap_or_default(),
            opt_real(e.map(|e| e.value)),
            opt_real(e.map(|e| e.radius)),
        ]);
        radii.push(RadiusEntry::new("L", format!("sigma={sigma}"), l));
        if let Some(e) = e {
            radii.push(RadiusEntry::new("euler_product", format!("sigma={sigma}"), e));
        }
        rows.push(json!({ "sigma": sigma, "l_value": l, "euler_product": e, "agree": e.map(|e| e.overlaps(&l)) }));
    }
    Ok(Report { task: Task::Lvalue, csv: Some(t.finish()), summary: json!({ "character": cfg.character, "rows": rows }), radii })
}

fn verify_lemma(cfg: &ExperimentConfig, w: &DirichletWeight) -> Result<Report, CliError> {
    let limits = DecompositionLimits { n_trunc: cfg.n_trunc, prime_limit: cfg.prime_limit, m_max: cfg.m_max };
    let mut t = Table::new(&[
        "sigma",
        "log_l",
        "log_l_radius",
        "prime_sum",
        "prime_sum_radius",
        "b",
        "b_radius",
        "residual",
        "radius_sum",
        "within_radii",
    ]);
    let mut radii = Vec::new();
    let mut rows = Vec::new();
    for sigma in cfg.sigma_values()? {
        let r = verify_log_decomposition(w, sigma, limits)?;
        t.row(&[
            fmt_real(sigma),
            fmt_real(r.log_l.value),
            fmt_real(r.log_l.radius),
            fmt_real(r.prime_sum.value),
            fmt_real(r.prime_sum.radius),
            fmt_real(r.b_value.value),
            fmt_real(r.b_value.radius),
            fmt_real(r.residual),
            fmt_real(r.radius_sum()),
            r.within_radii().to_string(),
        ]);
        let at = format!("sigma={sigma}");
        radii.push(RadiusEntry::new("log_L", at.clone(), r.log_l));
        radii.push(RadiusEntry::new("prime_sum", at.clone(), r.prime_sum));
        radii.push(RadiusEntry::new("B", at, r.b_value));
        rows.push(json!({ "report": r, "radius_sum": r.radius_sum(), "within_radii": r.within_radii() }));
    }
    let summary = json!({ "character": cfg.character, "limits": limits, "rows": rows });
    Ok(Report { task: Task::VerifyLemma, csv: Some(t.finish()), summary, radii })
}

fn scan_options(cfg: &ExperimentConfig, workers: usize) -> ScanOptions {
    ScanOptions { workers, n_trunc: cfg.n_trunc, precision: cfg.precision, ..ScanOptions::default() }
}

fn bias_scan(cfg: &ExperimentConfig, w: &DirichletWeight, workers: usize) -> Result<Report, CliError> {
    let x_max = cfg.x_max.expect("validated");
    let rows = bias_bound_scan(w, &cfg.sigma_values()?, x_max, &scan_options(cfg, workers))?;
    let mut t = Table::new(&[
        "sigma",
        "x_max",
        "A",
        "A_error_bound",
        "half_log",
        "log_l",
        "log_l_radius",
        "R",
        "R_radius",
        "last_octave_bound",
        "error",
    ]);
    let mut radii = Vec::new();
    for r in &rows {
        t.row(&[
            fmt_real(r.sigma),
            r.x_max.to_string(),
            fmt_real(r.race.value),
            fmt_real(r.race.error),
            fmt_real(r.half_log),
            opt_real(r.log_l.map(|b| b.value)),
            opt_real(r.log_l.map(|b| b.radius)),
            opt_real(r.r.map(|b| b.value)),
            opt_real(r.r.map(|b| b.radius)),
            fmt_real(r.last_octave_bound),
            r.error.clone().unwrap_or_default(),
        ]);
        let at = format!("sigma={}", r.sigma);
        radii.push(RadiusEntry::new("A", format!("{at},x={}", r.x_max), BoundedValue::new(r.race.value, r.race.error)));
        if let (Some(l), Some(rv)) = (r.log_l, r.r) {
            radii.push(RadiusEntry::new("log_L", at.clone(), l));
            radii.push(RadiusEntry::new("R", at, rv));
        }
    }
    let summary = json!({
        "character": cfg.character,
        "x_max": x_max,
        "n_trunc": cfg.n_trunc,
        "rows": rows.len(),
        "all_finite": rows.iter().all(|r| r.r.is_some_and(|b| b.value.is_finite() && b.radius.is_finite())),
        "note": "A is the truncated prime sum at x_max, not a limit",
    });
    Ok(Report { task: Task::BiasScan, csv: Some(t.finish()), summary, radii })
}

fn mellin(cfg: &ExperimentConfig, w: &DirichletWeight) -> Result<Report, CliError> {
    let m = mellin_identity_check(w, cfg.sigma.expect("validated"), cfg.s.expect("validated"), cfg.x_max.expect("validated"))?;
    let mut t = Table::new(&["sigma", "s", "X", "lhs", "rhs", "residual"]);
    t.row(&[fmt_real(m.sigma), fmt_real(m.s), m.x.to_string(), fmt_real(m.lhs), fmt_real(m.rhs), fmt_real(m.residual)]);
    let mut summary = serde_json::to_value(m).expect("serializable");
    summary["character"] = json!(cfg.character);
    Ok(Report { task: Task::MellinCheck, csv: Some(t.finish()), summary, radii: vec![] })
}

fn conjecture(cfg: &ExperimentConfig, workers: usize) -> Result<Report, CliError> {
    let rep = conjecture_scan(cfg.points.as_deref().expect("validated"), &scan_options(cfg, workers))?;
    let summary = json!({
        "min_x": rep.min_x,
        "min_value": rep.min_value,
        "final_value": rep.final_value,
        "all_negative_from_1e3": rep.all_negative_from_1e3,
        "negative_count": rep.negative_count,
        "positive_count": rep.positive_count,
        "note": "sampled observations only; no statement about the limit",
    });
    Ok(Report {
        task: Task::Conjecture,
        csv: Some(race_table(&rep.rows)),
        summary,
        radii: rep.rows.iter().map(RadiusEntry::race).collect(),
    })
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    }
    std::fs::write(path, body).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Validate, execute, and write every requested output plus the manifest.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let start = Instant::now();
    let report = execute(cfg, opts)?;
    let wall_time_seconds = start.elapsed().as_secs_f64();
    let mut written = Vec::new();
    if let (Some(path), Some(body)) = (&cfg.outputs.csv, &report.csv) {
        write_file(path, body)?;
        written.push(path.clone());
    }
    if let Some(path) = &cfg.outputs.json {
        write_file(path, &(serde_json::to_string_pretty(&report.summary).expect("serializable") + "\n"))?;
        written.push(path.clone());
    }
    let manifest = cfg.outputs.manifest_path();
    if let Some(path) = &manifest {
        let body = json!({
            "artifact": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "task": cfg.task.name(),
            "config": cfg.to_map(),
            "workers": opts.workers,
            "wall_time_seconds": wall_time_seconds,
            "outputs": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "radii": report.radii,
            "summary": report.summary,
        });
        write_file(path, &(serde_json::to_string_pretty(&body).expect("serializable") + "\n"))?;
    }
    Ok(RunOutcome { report, written, manifest, wall_time_seconds })
}
