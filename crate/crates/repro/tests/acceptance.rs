//! Acceptance run: one PASS/FAIL line per criterion, with its runtime limit.
//! Exits non-zero if any criterion fails.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use primerace::characters::{build_character, chi4, weight_at, DirichletWeight, WeightSpec};
use primerace::lfun::{
    bias_bound_scan, euler_product_value, l_value, mellin_identity_check, verify_log_decomposition, DecompositionLimits,
    ScanOptions,
};
use primerace::races::{detect_sign_changes, weighted_race, weighted_race_with, RaceOptions};
use primerace::sieve::prime_stream;
use primerace_cli::{run_experiment, ExperimentConfig, RunOptions};
use primerace_repro::{alternating_series, exact_chi4_race, integer_sign_changes};

const PARALLEL_WORKERS: usize = 4;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(id: u32, name: &str, limit_s: f64, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let secs = start.elapsed().as_secs_f64();
    let in_time = secs < limit_s;
    let pass = out.pass && in_time;
    let timing = match (limit_s.is_finite(), in_time) {
        (false, _) => format!("{secs:.2}s"),
        (true, true) => format!("{secs:.2}s < {limit_s}s"),
        (true, false) => format!("{secs:.2}s exceeds {limit_s}s"),
    };
    println!("criterion {id:>2} {:<30} {}  [{timing}] {}", name, if pass { "PASS" } else { "FAIL" }, out.detail);
    pass
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn character_axioms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut weights: Vec<(String, DirichletWeight)> = vec![("chi4".into(), chi4())];
    for d in [-4i64, -3, 5, 8, -8, 12] {
        weights.push((format!("kronecker:{d}"), build_character(&WeightSpec::Kronecker(d)).expect("fundamental")));
    }
    let mut failures = Vec::new();
    for (name, w) in &weights {
        let c = w.as_character().expect("character");
        let q = c.modulus();
        let at = |n: u64| weight_at(w, n).expect("n >= 1");
        if !(1..=100_000).all(|n| at(n) == at(n + q)) {
            failures.push(format!("{name}: periodicity"));
        }
        let pairs_ok = (0..10_000).all(|_| {
            let (m, n) = (rng.random_range(1..=1_000_000u64), rng.random_range(1..=1_000_000u64));
            at(m * n) == at(m) * at(n)
        });
        if !pairs_ok {
            failures.push(format!("{name}: multiplicativity"));
        }
        if !(1..=100 * q).all(|n| (gcd(n, q) > 1) == (at(n) == 0.0)) {
            failures.push(format!("{name}: gcd vanishing"));
        }
        if !(1..q).any(|n| at(n) == -1.0) {
            failures.push(format!("{name}: principal"));
        }
        let mut s = 0i64;
        let mut max_abs = 0i64;
        for n in 1..=1_000_000u64 {
            s += c.at(n) as i64;
            max_abs = max_abs.max(s.abs());
        }
        if max_abs > q as i64 {
            failures.push(format!("{name}: |S| = {max_abs} > q"));
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() { format!("{} characters", weights.len()) } else { failures.join("; ") },
    }
}

fn lemma_decomposition() -> Outcome {
    let limits = DecompositionLimits { prime_limit: 10_000_000, ..DecompositionLimits::default() };
    let mut pass = true;
    let mut parts = Vec::new();
    for sigma in [1.1, 1.5, 2.0] {
        let r = verify_log_decomposition(&chi4(), sigma, limits).expect("sigma > 1");
        let ok = r.within_radii() && r.residual.abs() < 1e-8;
        pass &= ok;
        parts.push(format!(
            "s={sigma}: residual {:.2e}, radii {:.2e}, within={}, <1e-8={}",
            r.residual,
            r.radius_sum(),
            r.within_radii(),
            r.residual.abs() < 1e-8
        ));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn euler_equivalence() -> Outcome {
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for w in [chi4(), build_character(&WeightSpec::Kronecker(5)).unwrap()] {
        for sigma in [1.5, 2.0, 3.0] {
            let l = l_value(&w, sigma, 10_000_000).unwrap();
            let e = euler_product_value(&w, sigma, 10_000_000).unwrap();
            pass &= l.overlaps(&e);
            worst = worst.max((l.value - e.value).abs() / (l.radius + e.radius));
        }
    }
    Outcome { pass, detail: format!("max |L-E|/(rL+rE) = {worst:.2e}") }
}

fn mellin_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let sigma = rng.random_range(0.0..3.0);
        let s = rng.random_range(sigma..=3.0);
        let x = rng.random_range(2..=100_000u64);
        worst = worst.max(mellin_identity_check(&chi4(), sigma, s, x).unwrap().residual);
    }
    let degenerate_exact = [(0.0, 10u64), (0.5, 100_000), (1.0, 54_321), (2.5, 99_991)]
        .iter()
        .all(|&(sigma, x)| mellin_identity_check(&chi4(), sigma, sigma, x).map(|m| m.residual == 0.0).unwrap_or(false));
    Outcome {
        pass: worst < 1e-10 && degenerate_exact,
        detail: format!("max residual {worst:.2e} over 20 triples; s=sigma exact: {degenerate_exact}"),
    }
}

fn exact_race() -> Outcome {
    let oracle = exact_chi4_race(100_000);
    let xs: Vec<u64> = oracle.iter().map(|&(p, _)| p).collect();
    let series = weighted_race(&chi4(), 0.0, 100_000, &xs).unwrap();
    let value_mismatches = series
        .values
        .iter()
        .zip(&oracle)
        .filter(|(pt, &(p, a))| pt.x != p || pt.value != a as f64 || pt.error != 0.0)
        .count();
    let report = detect_sign_changes(&series).unwrap();
    let brute_changes = integer_sign_changes(oracle.iter().copied());
    let values_ok = value_mismatches == 0 && series.values.len() == oracle.len();
    let agrees = report.change_locations == brute_changes;
    Outcome {
        pass: values_ok && agrees && report.change_count == 0,
        detail: format!(
            "{} primes, value mismatches {value_mismatches}; change_count {} at {:?} (brute force {:?}); required 0",
            oracle.len(),
            report.change_count,
            report.change_locations,
            brute_changes
        ),
    }
}

fn l_value_oracles() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (sigma, terms, n_trunc, label) in [(1.0, 10_000_000u64, 10_000_000u64, "pi/4"), (2.0, 1_000_000, 1_000_000, "Catalan")] {
        let (oracle, oracle_radius) = alternating_series(sigma, terms);
        let l = l_value(&chi4(), sigma, n_trunc).unwrap();
        let diff = (l.value - oracle).abs();
        let ok = diff < 1e-10 && diff <= l.radius + oracle_radius;
        pass &= ok;
        parts.push(format!("{label}: diff {diff:.2e}, radii {:.2e}", l.radius + oracle_radius));
    }
    Outcome { pass, detail: parts.join("; ") }
}

const BIAS_GRID: &str = "0.55:0.95:0.05";

fn config(text: &str, dir: &Path, stem: &str) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_text(text).unwrap();
    cfg.outputs.csv = Some(dir.join(format!("{stem}.csv")));
    cfg.outputs.json = Some(dir.join(format!("{stem}.json")));
    cfg
}

fn outputs_of(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<u8>, String> {
    run_experiment(cfg, &RunOptions { workers }).map_err(|e| e.to_string())?;
    let mut bytes = std::fs::read(cfg.outputs.csv.as_ref().unwrap()).map_err(|e| e.to_string())?;
    bytes.extend(std::fs::read(cfg.outputs.json.as_ref().unwrap()).map_err(|e| e.to_string())?);
    Ok(bytes)
}

fn bias_scan(dir: &Path) -> Outcome {
    let cfg = config(&format!("task = bias-scan\nsigma_grid = {BIAS_GRID}\nx_max = 1e7\n"), dir, "bias");
    if let Err(e) = outputs_of(&cfg, 1) {
        return Outcome { pass: false, detail: e };
    }
    let grid = cfg.sigma_values().unwrap();
    let opts = ScanOptions::default();
    let full = bias_bound_scan(&chi4(), &grid, 10_000_000, &opts).unwrap();
    let half = bias_bound_scan(&chi4(), &grid, 5_000_000, &opts).unwrap();
    let mut pass = full.len() == 9;
    let mut worst: f64 = 0.0;
    for (f, h) in full.iter().zip(&half) {
        let (Some(rf), Some(rh)) = (f.r, h.r) else {
            pass = false;
            continue;
        };
        pass &= rf.value.is_finite() && rf.radius.is_finite();
        let allowed = f.last_octave_bound + rf.radius + rh.radius;
        let shift = (rf.value - rh.value).abs();
        pass &= shift <= allowed;
        worst = worst.max(shift / allowed);
    }
    let r = |s: f64| full.iter().find(|row| row.sigma == s).and_then(|row| row.r).map_or(f64::NAN, |b| b.value);
    Outcome {
        pass,
        detail: format!(
            "{} rows finite; max shift/disclosed {:.2e}; R(0.55)={:.4} R(0.95)={:.4}",
            full.len(),
            worst,
            r(0.55),
            r(0.95)
        ),
    }
}

const CONJECTURE_POINTS: &str = "1e3,1e4,...,1e8";

fn conjecture(dir: &Path) -> Outcome {
    let text = format!("task = conjecture\npoints = {CONJECTURE_POINTS}\n");
    let a = outputs_of(&config(&text, dir, "conj_a"), 1);
    let b = outputs_of(&config(&text, dir, "conj_b"), 1);
    match (a, b) {
        (Ok(a), Ok(b)) => {
            let summary = std::fs::read_to_string(dir.join("conj_a.json")).unwrap_or_default();
            let negative = summary.contains("\"all_negative_from_1e3\": true");
            Outcome {
                pass: a == b && summary.contains("all_negative_from_1e3"),
                detail: format!("two runs identical: {}; all sampled values negative: {negative}", a == b),
            }
        }
        (Err(e), _) | (_, Err(e)) => Outcome { pass: false, detail: e },
    }
}

fn performance() -> Outcome {
    let t = Instant::now();
    let count = prime_stream(100_000_000).count();
    let sieve_s = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let opts = RaceOptions { workers: 1, track_signs: false, ..RaceOptions::default() };
    let race = weighted_race_with(&chi4(), 0.5, 100_000_000, &[], &opts).unwrap();
    let race_s = t.elapsed().as_secs_f64();
    Outcome {
        pass: count == 5_761_455 && sieve_s < 10.0 && race_s < 60.0,
        detail: format!(
            "pi(1e8)={count} in {sieve_s:.2}s (<10s); race sigma=1/2 to 1e8 in {race_s:.2}s (<60s), A={:.6} +- {:.1e}",
            race.last.value, race.last.error
        ),
    }
}

fn determinism(dir: &Path) -> Outcome {
    let cases = [
        ("sign-changes", "task = sign-changes\nsigma = 0\nx_max = 1e5\ncheckpoints = geometric\n".to_string()),
        ("bias-scan", format!("task = bias-scan\nsigma_grid = {BIAS_GRID}\nx_max = 1e7\n")),
        ("conjecture", format!("task = conjecture\npoints = {CONJECTURE_POINTS}\n")),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, text) in cases {
        let one = outputs_of(&config(&text, dir, &format!("det_{name}_1")), 1);
        let many = outputs_of(&config(&text, dir, &format!("det_{name}_n")), PARALLEL_WORKERS);
        let same = matches!((&one, &many), (Ok(a), Ok(b)) if a == b);
        pass &= same;
        parts.push(format!("{name}: {}", if same { "identical" } else { "DIFFER" }));
    }
    Outcome { pass, detail: format!("1 vs {PARALLEL_WORKERS} workers: {}", parts.join(", ")) }
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let dir = tempfile::tempdir().expect("temp dir");
    let results = [
        check(1, "character axioms", 10.0, character_axioms),
        check(2, "log L decomposition", 60.0, lemma_decomposition),
        check(3, "L-value vs Euler product", 30.0, euler_equivalence),
        check(4, "Abel/Mellin identity", 10.0, mellin_identity),
        check(5, "exact race oracle", 5.0, exact_race),
        check(6, "L-value series oracles", 10.0, l_value_oracles),
        check(7, "bias-bound scan", 120.0, || bias_scan(dir.path())),
        check(8, "conjecture scan", 300.0, || conjecture(dir.path())),
        check(9, "performance", 70.0, performance),
        check(10, "determinism across workers", f64::INFINITY, || determinism(dir.path())),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, &ok)| !ok).map(|(i, _)| i + 1).collect();
    println!("acceptance: {} of {} criteria pass", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
