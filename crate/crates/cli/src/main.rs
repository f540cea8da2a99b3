use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use primerace_cli::{run_experiment, workers_from_env, CliError, ExperimentConfig, RunOptions, Task};

#[derive(Parser)]
#[command(name = "primerace", version, about = "Weighted prime races, Dirichlet characters and L-function checks")]
struct Cli {
    /// Print the resolved config in file form and exit.
    #[arg(long, global = true)]
    dump_config: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Weight spec: kronecker:<d>, table:<q>:<values>, multiplicative:<p>=<v>,...;default=<v>
    #[arg(long = "spec", alias = "character")]
    spec: Option<String>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON summary path.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Manifest path; defaults next to the first output.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// standard or oracle.
    #[arg(long)]
    precision: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Count or list primes up to a limit.
    Sieve {
        #[arg(long)]
        limit: String,
        #[arg(long, conflicts_with = "emit")]
        count_only: bool,
        #[arg(long)]
        emit: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Build and validate a character.
    Character {
        #[arg(long)]
        print_period: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Weighted race A(x) = Σ_{p<=x} w(p) p^{-σ} at checkpoints.
    Race {
        #[arg(long, allow_hyphen_values = true)]
        sigma: String,
        #[arg(long)]
        xmax: String,
        /// none, geometric, or a comma list.
        #[arg(long)]
        checkpoints: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Sign changes of the race, as JSON.
    SignChanges {
        #[arg(long, allow_hyphen_values = true)]
        sigma: String,
        #[arg(long)]
        xmax: String,
        #[arg(long)]
        checkpoints: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// L(σ, χ) with a proven radius.
    Lvalue {
        #[arg(long, conflicts_with = "sigma_grid", allow_hyphen_values = true)]
        sigma: Option<String>,
        #[arg(long)]
        sigma_grid: Option<String>,
        #[arg(long)]
        ntrunc: Option<String>,
        /// Euler product truncation for σ > 1.
        #[arg(long)]
        prime_limit: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// log L = Σ_p χ(p)p^{-σ} + B(σ) with radii, for σ > 1.
    VerifyLemma {
        #[arg(long, conflicts_with = "sigma_grid", allow_hyphen_values = true)]
        sigma: Option<String>,
        #[arg(long)]
        sigma_grid: Option<String>,
        #[arg(long)]
        ntrunc: Option<String>,
        #[arg(long)]
        prime_limit: Option<String>,
        #[arg(long)]
        mmax: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// R(σ) = log L(σ) - A(x_max) - ½ log(1/(2σ-1)) over a σ grid in (1/2, 1].
    BiasScan {
        /// start:stop:step or a comma list.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        xmax: String,
        #[arg(long)]
        ntrunc: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Both sides of the truncated Abel identity.
    MellinCheck {
        #[arg(long, allow_hyphen_values = true)]
        sigma: String,
        #[arg(long, allow_hyphen_values = true)]
        s: String,
        #[arg(long = "X", alias = "x")]
        x: String,
        #[command(flatten)]
        common: Common,
    },
    /// Σ_{p<=x} χ₄(p)/√p at the given points.
    Conjecture {
        /// Comma list; `1e3,1e4,...,1e8` continues the progression.
        #[arg(long)]
        points: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override a config key.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn apply_common(cfg: &mut ExperimentConfig, c: Common) -> Result<(), CliError> {
    if let Some(s) = c.spec {
        cfg.set("character", &s)?;
    }
    if let Some(p) = c.precision {
        cfg.set("precision", &p)?;
    }
    cfg.outputs.csv = c.out.or(cfg.outputs.csv.take());
    cfg.outputs.json = c.json.or(cfg.outputs.json.take());
    cfg.outputs.manifest = c.manifest.or(cfg.outputs.manifest.take());
    Ok(())
}

fn set_opt(cfg: &mut ExperimentConfig, key: &str, v: Option<String>) -> Result<(), CliError> {
    v.map_or(Ok(()), |v| cfg.set(key, &v))
}

fn race_config(
    task: Task,
    sigma: String,
    xmax: String,
    checkpoints: Option<String>,
    common: Common,
) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::new(task);
    cfg.set("sigma", &sigma)?;
    cfg.set("x_max", &xmax)?;
    set_opt(&mut cfg, "checkpoints", checkpoints)?;
    apply_common(&mut cfg, common)?;
    Ok(cfg)
}

fn build_config(command: Command) -> Result<(ExperimentConfig, bool), CliError> {
    let mut count_only = false;
    let cfg = match command {
        Command::Sieve { limit, count_only: co, emit, common } => {
            let mut cfg = ExperimentConfig::new(Task::Sieve);
            cfg.set("x_max", &limit)?;
            cfg.emit = emit;
            count_only = co;
            apply_common(&mut cfg, common)?;
            cfg
        }
        Command::Character { print_period, common } => {
            let mut cfg = ExperimentConfig::new(Task::Character);
            cfg.emit = print_period;
            apply_common(&mut cfg, common)?;
            cfg
        }
        Command::Race { sigma, xmax, checkpoints, common } => race_config(Task::Race, sigma, xmax, checkpoints, common)?,
        Command::SignChanges { sigma, xmax, checkpoints, common } => {
            race_config(Task::SignChanges, sigma, xmax, checkpoints, common)?
        }
        Command::Lvalue { sigma, sigma_grid, ntrunc, prime_limit, common } => {
            let mut cfg = ExperimentConfig::new(Task::Lvalue);
            set_opt(&mut cfg, "sigma", sigma)?;
            set_opt(&mut cfg, "sigma_grid", sigma_grid)?;
            set_opt(&mut cfg, "n_trunc", ntrunc)?;
            set_opt(&mut cfg, "prime_limit", prime_limit)?;
            apply_common(&mut cfg, common)?;
            cfg
        }
        Command::VerifyLemma { sigma, sigma_grid, ntrunc, prime_limit, mmax, common } => {
            let mut cfg = ExperimentConfig::new(Task::VerifyLemma);
            set_opt(&mut cfg, "sigma", sigma)?;
            set_opt(&mut cfg, "sigma_grid", sigma_grid)?;
            set_opt(&mut cfg, "n_trunc", ntrunc)?;
            set_opt(&mut cfg, "prime_limit", prime_limit)?;
            set_opt(&mut cfg, "m_max", mmax)?;
            apply_common(&mut cfg, common)?;
            cfg
        }
        Command::BiasScan { grid, xmax, ntrunc, common } => {
            let mut cfg = ExperimentConfig::new(Task::BiasScan);
            cfg.set("sigma_grid", &grid)?;
            cfg.set("x_max", &xmax)?;
            set_opt(&mut cfg, "n_trunc", ntrunc)?;
            apply_common(&mut cfg, common)?;
            cfg
        }
        Command::MellinCheck { sigma, s, x, common } => {
            let mut cfg = ExperimentConfig::new(Task::MellinCheck);
            cfg.set("sigma", &sigma)?;
            cfg.set("s", &s)?;
            cfg.set("x_max", &x)?;
            apply_common(&mut cfg, common)?;
            cfg
        }
        Command::Conjecture { points, common } => {
            let mut cfg = ExperimentConfig::new(Task::Conjecture);
            cfg.set("points", &points)?;
            apply_common(&mut cfg, common)?;
            cfg
        }
        Command::Run { config, overrides } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            for o in overrides {
                let (k, v) = o
                    .split_once('=')
                    .ok_or_else(|| CliError::Validation { field: "--set".into(), message: format!("{o:?} is not KEY=VALUE") })?;
                cfg.set(k.trim(), v)?;
            }
            cfg
        }
    };
    Ok((cfg, count_only))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn real_main(cli: Cli) -> Result<(), CliError> {
    let (cfg, count_only) = build_config(cli.command)?;
    if cli.dump_config {
        print!("{}", cfg.to_text());
        return Ok(());
    }
    let workers = workers_from_env()?;
    let outcome = run_experiment(&cfg, &RunOptions { workers })?;
    let printed = print_primary(&cfg, &outcome.report, count_only);
    match printed {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => return Ok(()),
        Err(source) => return Err(CliError::Io { path: PathBuf::from("<stdout>"), source }),
        Ok(()) => {}
    }
    for p in outcome.written.iter().chain(&outcome.manifest) {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

/// Whatever belongs on stdout when no file path was given for it.
fn print_primary(cfg: &ExperimentConfig, report: &primerace_cli::Report, count_only: bool) -> std::io::Result<()> {
    let mut out = std::io::stdout().lock();
    if count_only {
        writeln!(out, "{}", report.summary["prime_count"])?;
    } else if report.primary_is_json() {
        if cfg.outputs.json.is_none() {
            writeln!(out, "{}", serde_json::to_string_pretty(&report.summary).expect("serializable"))?;
        }
        if let (Some(csv), None, true) = (&report.csv, &cfg.outputs.csv, cfg.emit) {
            write!(out, "{csv}")?;
        }
    } else if cfg.outputs.csv.is_none() {
        write!(out, "{}", report.csv.as_deref().unwrap_or_default())?;
    }
    out.flush()
}
