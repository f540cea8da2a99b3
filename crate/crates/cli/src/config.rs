//! Flat `key = value` experiment configs.
//!
//! Blank lines and lines starting with `#` are ignored. Every key maps onto
//! one field of [`ExperimentConfig`]; command-line flags go through the same
//! [`ExperimentConfig::set`] so both paths validate identically.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use primerace::characters::{build_character, chi4, DirichletWeight, WeightSpec};
use primerace::lfun::{DEFAULT_M_MAX, DEFAULT_N_TRUNC};
use primerace::races::PrecisionMode;

use crate::CliError;

pub const DEFAULT_CHARACTER: &str = "kronecker:-4";
pub const DEFAULT_PRIME_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Sieve,
    Character,
    Race,
    SignChanges,
    Lvalue,
    VerifyLemma,
    BiasScan,
    MellinCheck,
    Conjecture,
}

impl Task {
    pub const ALL: [Task; 9] = [
        Task::Sieve,
        Task::Character,
        Task::Race,
        Task::SignChanges,
        Task::Lvalue,
        Task::VerifyLemma,
        Task::BiasScan,
        Task::MellinCheck,
        Task::Conjecture,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Sieve => "sieve",
            Task::Character => "character",
            Task::Race => "race",
            Task::SignChanges => "sign-changes",
            Task::Lvalue => "lvalue",
            Task::VerifyLemma => "verify-lemma",
            Task::BiasScan => "bias-scan",
            Task::MellinCheck => "mellin-check",
            Task::Conjecture => "conjecture",
        }
    }
}

impl FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown task {s:?}; expected one of {}", Task::ALL.map(Task::name).join(", ")))
    }
}

/// Where race values are recorded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Checkpoints {
    /// Only `x_max`.
    None,
    /// `round(10^{k/16})`, powers of ten and `x_max`.
    Geometric,
    List(Vec<u64>),
}

impl fmt::Display for Checkpoints {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Checkpoints::None => f.write_str("none"),
            Checkpoints::Geometric => f.write_str("geometric"),
            Checkpoints::List(v) => f.write_str(&join(v)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SigmaGrid {
    /// `start:stop:step`, both ends included.
    Range { start: f64, stop: f64, step: f64 },
    List(Vec<f64>),
}

impl SigmaGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            SigmaGrid::List(v) => v.clone(),
            SigmaGrid::Range { start, stop, step } => {
                let n = ((stop - start) / step + 1e-9).floor() as u64;
                // snap to 12 decimals so 0.55 + 2*0.05 prints as 0.65
                (0..=n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect()
            }
        }
    }
}

impl fmt::Display for SigmaGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaGrid::Range { start, stop, step } => write!(f, "{start}:{stop}:{step}"),
            SigmaGrid::List(v) => f.write_str(&join(v)),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outputs {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

impl Outputs {
    /// Explicit manifest path, else one derived from the CSV or JSON path.
    pub fn manifest_path(&self) -> Option<PathBuf> {
        self.manifest.clone().or_else(|| {
            self.csv.as_deref().or(self.json.as_deref()).map(|p| p.with_extension("manifest.json"))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub character: String,
    pub sigma: Option<f64>,
    pub sigma_grid: Option<SigmaGrid>,
    pub s: Option<f64>,
    pub x_max: Option<u64>,
    pub checkpoints: Checkpoints,
    pub points: Option<Vec<u64>>,
    pub n_trunc: u64,
    pub prime_limit: u64,
    pub m_max: u32,
    pub precision: PrecisionMode,
    /// Emit the primes (sieve) or the period table (character).
    pub emit: bool,
    pub outputs: Outputs,
}

pub const KEYS: [&str; 15] = [
    "task",
    "character",
    "sigma",
    "sigma_grid",
    "s",
    "x_max",
    "checkpoints",
    "points",
    "n_trunc",
    "prime_limit",
    "m_max",
    "precision",
    "emit",
    "output.csv",
    "output.json",
];

const MANIFEST_KEY: &str = "output.manifest";

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Validation { field: field.to_string(), message: message.into() }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Accepts `100000`, `1e8` or `1_000_000`; the value must be a whole number.
pub fn parse_count(field: &str, raw: &str) -> Result<u64, CliError> {
    let raw = raw.trim().replace('_', "");
    if let Ok(n) = raw.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = raw.parse().map_err(|_| invalid(field, format!("{raw:?} is not a non-negative integer")))?;
    if !(x >= 0.0) || x.fract() != 0.0 || x > 9.007_199_254_740_992e15 {
        return Err(invalid(field, format!("{raw:?} is not a non-negative integer")));
    }
    Ok(x as u64)
}

fn parse_real(field: &str, raw: &str) -> Result<f64, CliError> {
    let x: f64 = raw.trim().parse().map_err(|_| invalid(field, format!("{raw:?} is not a number")))?;
    if !x.is_finite() {
        return Err(invalid(field, "must be finite"));
    }
    Ok(x)
}

/// Comma-separated counts; a `...` entry continues the geometric progression
/// of the two entries before it up to the entry after it.
pub fn parse_points(field: &str, raw: &str) -> Result<Vec<u64>, CliError> {
    let tokens: Vec<&str> = raw.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    let mut out: Vec<u64> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i] == "..." {
            let (a, b) = match out.as_slice() {
                [.., a, b] => (*a, *b),
                _ => return Err(invalid(field, "'...' needs two entries before it")),
            };
            let end = tokens.get(i + 1).ok_or_else(|| invalid(field, "'...' needs an entry after it"))?;
            let end = parse_count(field, end)?;
            if a == 0 || b % a != 0 || b / a < 2 {
                return Err(invalid(field, "'...' needs an integer ratio of at least 2"));
            }
            let ratio = b / a;
            let mut next = b;
            loop {
                next = next.checked_mul(ratio).ok_or_else(|| invalid(field, "progression overflows"))?;
                if next >= end {
                    break;
                }
                out.push(next);
            }
            if next != end {
                return Err(invalid(field, format!("progression with ratio {ratio} does not reach {end}")));
            }
            i += 1;
            continue;
        }
        out.push(parse_count(field, tokens[i])?);
        i += 1;
    }
    if out.is_empty() {
        return Err(invalid(field, "empty list"));
    }
    Ok(out)
}

fn parse_grid(field: &str, raw: &str) -> Result<SigmaGrid, CliError> {
    let raw = raw.trim();
    if raw.contains(':') {
        let parts: Vec<&str> = raw.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(invalid(field, "expected start:stop:step"));
        };
        let (start, stop, step) = (parse_real(field, a)?, parse_real(field, b)?, parse_real(field, c)?);
        if !(step > 0.0) || stop < start {
            return Err(invalid(field, "need start <= stop and step > 0"));
        }
        return Ok(SigmaGrid::Range { start, stop, step });
    }
    let v = raw.split(',').map(|t| parse_real(field, t)).collect::<Result<Vec<_>, _>>()?;
    Ok(SigmaGrid::List(v))
}

fn parse_bool(field: &str, raw: &str) -> Result<bool, CliError> {
    match raw.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(invalid(field, format!("{other:?} is not a boolean"))),
    }
}

fn optional_path(raw: &str) -> Option<PathBuf> {
    let raw = raw.trim();
    (!raw.is_empty()).then(|| PathBuf::from(raw))
}

impl ExperimentConfig {
    pub fn new(task: Task) -> Self {
        Self {
            task,
            character: DEFAULT_CHARACTER.to_string(),
            sigma: None,
            sigma_grid: None,
            s: None,
            x_max: None,
            checkpoints: Checkpoints::None,
            points: None,
            n_trunc: DEFAULT_N_TRUNC,
            prime_limit: DEFAULT_PRIME_LIMIT,
            m_max: DEFAULT_M_MAX,
            precision: PrecisionMode::Standard,
            emit: false,
            outputs: Outputs::default(),
        }
    }

    /// Set one field from its textual form.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<(), CliError> {
        let raw = raw.trim();
        match key {
            "task" => self.task = raw.parse().map_err(|m: String| invalid(key, m))?,
            "character" => self.character = raw.to_string(),
            "sigma" => self.sigma = Some(parse_real(key, raw)?),
            "sigma_grid" => self.sigma_grid = Some(parse_grid(key, raw)?),
            "s" => self.s = Some(parse_real(key, raw)?),
            "x_max" => self.x_max = Some(parse_count(key, raw)?),
            "checkpoints" => {
                self.checkpoints = match raw {
                    "none" => Checkpoints::None,
                    "geometric" => Checkpoints::Geometric,
                    _ => Checkpoints::List(parse_points(key, raw)?),
                }
            }
            "points" => self.points = Some(parse_points(key, raw)?),
            "n_trunc" => self.n_trunc = parse_count(key, raw)?,
            "prime_limit" => self.prime_limit = parse_count(key, raw)?,
            "m_max" => {
                self.m_max = u32::try_from(parse_count(key, raw)?).map_err(|_| invalid(key, "too large"))?;
            }
            "precision" => {
                self.precision = match raw {
                    "standard" => PrecisionMode::Standard,
                    "oracle" => PrecisionMode::Oracle,
                    _ => return Err(invalid(key, "expected standard or oracle")),
                }
            }
            "emit" => self.emit = parse_bool(key, raw)?,
            "output.csv" => self.outputs.csv = optional_path(raw),
            "output.json" => self.outputs.json = optional_path(raw),
            MANIFEST_KEY => self.outputs.manifest = optional_path(raw),
            _ => return Err(invalid(key, "unknown key")),
        }
        Ok(())
    }

    /// Parse a config file body. `task` must appear.
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| invalid(&format!("line {}", lineno + 1), "expected key = value"))?;
            pairs.push((k.trim(), v.trim()));
        }
        let task = pairs.iter().find(|(k, _)| *k == "task").ok_or_else(|| invalid("task", "missing"))?.1;
        let mut cfg = Self::new(task.parse().map_err(|m: String| invalid("task", m))?);
        let mut seen = std::collections::HashSet::new();
        for (k, v) in pairs {
            if !seen.insert(k) {
                return Err(invalid(k, "given twice"));
            }
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::from_text(&text)
    }

    /// Canonical key/value form; unset optional fields are omitted.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("task", self.task.name().to_string());
        put("character", self.character.clone());
        if let Some(v) = self.sigma {
            put("sigma", v.to_string());
        }
        if let Some(g) = &self.sigma_grid {
            put("sigma_grid", g.to_string());
        }
        if let Some(v) = self.s {
            put("s", v.to_string());
        }
        if let Some(v) = self.x_max {
            put("x_max", v.to_string());
        }
        put("checkpoints", self.checkpoints.to_string());
        if let Some(p) = &self.points {
            put("points", join(p));
        }
        put("n_trunc", self.n_trunc.to_string());
        put("prime_limit", self.prime_limit.to_string());
        put("m_max", self.m_max.to_string());
        put(
            "precision",
            match self.precision {
                PrecisionMode::Standard => "standard",
                PrecisionMode::Oracle => "oracle",
            }
            .to_string(),
        );
        put("emit", self.emit.to_string());
        for (k, p) in [("output.csv", &self.outputs.csv), ("output.json", &self.outputs.json), (MANIFEST_KEY, &self.outputs.manifest)] {
            if let Some(p) = p {
                put(k, p.display().to_string());
            }
        }
        m
    }

    /// Serialize in a fixed key order.
    pub fn to_text(&self) -> String {
        let map = self.to_map();
        let mut out = String::new();
        for k in KEYS.iter().copied().chain([MANIFEST_KEY]) {
            if let Some(v) = map.get(k) {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }

    pub fn weight(&self) -> Result<DirichletWeight, CliError> {
        let spec: WeightSpec = self.character.parse().map_err(|e: primerace::characters::CharacterError| {
            invalid("character", e.to_string())
        })?;
        build_character(&spec).map_err(|e| invalid("character", e.to_string()))
    }

    fn require_sigma(&self) -> Result<f64, CliError> {
        self.sigma.ok_or_else(|| invalid("sigma", "required for this task"))
    }

    fn require_x_max(&self) -> Result<u64, CliError> {
        self.x_max.ok_or_else(|| invalid("x_max", "required for this task"))
    }

    /// σ values of a task that accepts either `sigma` or `sigma_grid`.
    pub fn sigma_values(&self) -> Result<Vec<f64>, CliError> {
        match (&self.sigma_grid, self.sigma) {
            (Some(_), Some(_)) => Err(invalid("sigma_grid", "give either sigma or sigma_grid, not both")),
            (Some(g), None) => Ok(g.values()),
            (None, Some(s)) => Ok(vec![s]),
            (None, None) => Err(invalid("sigma", "sigma or sigma_grid is required for this task")),
        }
    }

    fn check_sigmas(&self, ok: impl Fn(f64) -> bool, rule: &str) -> Result<(), CliError> {
        let field = if self.sigma_grid.is_some() { "sigma_grid" } else { "sigma" };
        match self.sigma_values()?.into_iter().find(|&s| !ok(s)) {
            Some(bad) => Err(invalid(field, format!("sigma = {bad} outside {rule}"))),
            None => Ok(()),
        }
    }

    /// Check every field the task uses against its documented domain.
    pub fn validate(&self) -> Result<(), CliError> {
        let w = self.weight()?;
        if let Some(s) = self.sigma {
            if s < 0.0 {
                return Err(invalid("sigma", format!("sigma = {s} must be >= 0")));
            }
        }
        match self.task {
            Task::Sieve => {
                self.require_x_max()?;
            }
            Task::Character => {}
            Task::Race | Task::SignChanges => {
                let s = self.require_sigma()?;
                if s > 1.0 {
                    return Err(invalid("sigma", format!("sigma = {s} outside [0, 1]")));
                }
                let x = self.require_x_max()?;
                if let Checkpoints::List(v) = &self.checkpoints {
                    if v.windows(2).any(|p| p[1] <= p[0]) {
                        return Err(invalid("checkpoints", "must be strictly ascending"));
                    }
                    if v.last().is_some_and(|&l| l > x) {
                        return Err(invalid("checkpoints", "exceed x_max"));
                    }
                }
            }
            Task::Lvalue => {
                self.check_sigmas(|s| s > 0.0, "(0, inf)")?;
                self.require_character(&w)?;
            }
            Task::VerifyLemma => {
                self.check_sigmas(|s| s > 1.0, "(1, inf)")?;
                self.require_character(&w)?;
            }
            Task::BiasScan => {
                self.check_sigmas(|s| s > 0.5 && s <= 1.0, "(1/2, 1]")?;
                self.require_character(&w)?;
                if self.require_x_max()? < 2 {
                    return Err(invalid("x_max", "must be at least 2"));
                }
            }
            Task::MellinCheck => {
                let sigma = self.require_sigma()?;
                let s = self.s.ok_or_else(|| invalid("s", "required for this task"))?;
                if s < sigma {
                    return Err(invalid("s", format!("s = {s} must be >= sigma = {sigma}")));
                }
                if self.require_x_max()? < 2 {
                    return Err(invalid("x_max", "must be at least 2"));
                }
            }
            Task::Conjecture => {
                let chi4 = chi4();
                let period = |w: &DirichletWeight| w.as_character().map(|c| c.period().to_vec());
                if period(&w) != period(&chi4) {
                    return Err(invalid("character", "the conjecture scan is defined for kronecker:-4 only"));
                }
                let p = self.points.as_ref().ok_or_else(|| invalid("points", "required for this task"))?;
                if p.windows(2).any(|w| w[1] < w[0]) {
                    return Err(invalid("points", "must be ascending"));
                }
            }
        }
        if self.n_trunc < 1 {
            return Err(invalid("n_trunc", "must be positive"));
        }
        if self.prime_limit < 2 {
            return Err(invalid("prime_limit", "must be at least 2"));
        }
        if self.m_max < 2 {
            return Err(invalid("m_max", "must be at least 2"));
        }
        let paths: Vec<(&str, PathBuf)> = [
            ("output.csv", self.outputs.csv.clone()),
            ("output.json", self.outputs.json.clone()),
            (MANIFEST_KEY, self.outputs.manifest_path()),
        ]
        .into_iter()
        .filter_map(|(k, p)| p.map(|p| (k, p)))
        .collect();
        for (i, (k, p)) in paths.iter().enumerate() {
            if paths[..i].iter().any(|(_, q)| q == p) {
                return Err(invalid(k, format!("{} is used by another output", p.display())));
            }
        }
        Ok(())
    }

    fn require_character(&self, w: &DirichletWeight) -> Result<(), CliError> {
        w.as_character()
            .map(|_| ())
            .ok_or_else(|| invalid("character", "this task needs a Dirichlet character, not a general weight"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = ExperimentConfig::new(Task::BiasScan);
        c.set("sigma_grid", "0.55:0.95:0.05").unwrap();
        c.set("x_max", "1e7").unwrap();
        c.set("output.csv", "bias.csv").unwrap();
        c.set("checkpoints", "10,100").unwrap();
        let text = c.to_text();
        let back = ExperimentConfig::from_text(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), text);
        assert_eq!(c.x_max, Some(10_000_000));
    }

    #[test]
    fn grid_values() {
        let g = parse_grid("g", "0.55:0.95:0.05").unwrap();
        let v = g.values();
        assert_eq!(v.len(), 9);
        assert_eq!(v[2], 0.65);
        assert_eq!(v[8], 0.95);
        assert_eq!(parse_grid("g", "0.51:0.99:0.02").unwrap().values().len(), 25);
        assert_eq!(parse_grid("g", "1.1,1.5,2").unwrap().values(), vec![1.1, 1.5, 2.0]);
    }

    #[test]
    fn points_with_ellipsis() {
        assert_eq!(parse_points("p", "1e3,1e4,...,1e7").unwrap(), vec![1000, 10_000, 100_000, 1_000_000, 10_000_000]);
        assert_eq!(parse_points("p", "10,100").unwrap(), vec![10, 100]);
        assert!(parse_points("p", "1e3,...,1e7").is_err());
        assert!(parse_points("p", "10,100,...,5000").is_err());
        assert!(parse_points("p", "1.5").is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let mut c = ExperimentConfig::new(Task::Race);
        c.set("x_max", "100").unwrap();
        c.set("sigma", "-0.1").unwrap();
        match c.validate() {
            Err(CliError::Validation { field, .. }) => assert_eq!(field, "sigma"),
            other => panic!("{other:?}"),
        }
        let err = ExperimentConfig::from_text("task = race\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, CliError::Validation { ref field, .. } if field == "bogus"));
        let err = ExperimentConfig::from_text("sigma = 1\n").unwrap_err();
        assert!(matches!(err, CliError::Validation { ref field, .. } if field == "task"));
    }

    #[test]
    fn outputs_must_be_distinct() {
        let mut c = ExperimentConfig::new(Task::Sieve);
        c.set("x_max", "100").unwrap();
        c.set("output.csv", "a.csv").unwrap();
        c.set("output.json", "a.csv").unwrap();
        assert!(matches!(c.validate(), Err(CliError::Validation { ref field, .. }) if field == "output.json"));
        c.set("output.json", "a.json").unwrap();
        c.validate().unwrap();
        assert_eq!(c.outputs.manifest_path(), Some(PathBuf::from("a.manifest.json")));
    }

    #[test]
    fn conjecture_needs_chi4() {
        let mut c = ExperimentConfig::new(Task::Conjecture);
        c.set("points", "10,100").unwrap();
        c.validate().unwrap();
        c.set("character", "kronecker:5").unwrap();
        assert!(c.validate().is_err());
    }
}
