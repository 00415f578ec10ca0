use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use homlab::ensemble::ExperimentKind;

mod commands;
mod config;
mod error;

use config::RunConfig;
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "homlab", version, about = "Stochastic homogenization laboratory on the periodic lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Coefficient field files and the empirical covariance profile.
    Sample,
    /// Corrector, flux corrector and homogenized tensor of one realization.
    Corrector,
    /// Minimal radius, growth, gradient averages and Gram spectrum of one realization.
    Diagnose,
    /// Monte-Carlo ensemble with fits.
    Experiment {
        #[arg(value_parser = parse_kind)]
        kind: ExperimentKind,
    },
    /// Triadic partition construction, refinement constant and interaction sum.
    PartitionCheck,
    /// Adjoint sensitivities against finite differences.
    SensitivityCheck,
}

fn parse_kind(s: &str) -> Result<ExperimentKind, String> {
    s.parse().map_err(|e: homlab::Error| e.to_string())
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Sample => "sample".into(),
            Command::Corrector => "corrector".into(),
            Command::Diagnose => "diagnose".into(),
            Command::Experiment { kind } => format!("experiment {kind}"),
            Command::PartitionCheck => "partition-check".into(),
            Command::SensitivityCheck => "sensitivity-check".into(),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema: u32,
    command: String,
    version: &'static str,
    status: &'static str,
    exit_code: i32,
    error: Option<String>,
    config: Option<&'a RunConfig>,
    outputs: Vec<String>,
    threads: usize,
    wall_time_seconds: f64,
}

fn load_config(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            RunConfig::parse(&text).map_err(|e| e.to_string())?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.display().to_string();
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn init_threads(threads: Option<usize>) -> Result<usize, String> {
    if threads == Some(0) {
        return Err("--threads must be at least 1".into());
    }
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = threads {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| format!("thread pool: {e}"))?;
        }
        Ok(rayon::current_num_threads())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(1)
    }
}

fn dispatch(cmd: &Command, cfg: &RunConfig, out: &Path) -> commands::Outcome {
    match cmd {
        Command::Sample => commands::sample(cfg, out),
        Command::Corrector => commands::corrector(cfg, out),
        Command::Diagnose => commands::diagnose(cfg, out),
        Command::Experiment { kind } => commands::experiment(cfg, *kind, out),
        Command::PartitionCheck => commands::partition_check(cfg, out),
        Command::SensitivityCheck => commands::sensitivity_check(cfg, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let cfg = load_config(&cli);
    let out = match (&cfg, &cli.out) {
        (Ok(c), _) => PathBuf::from(&c.out),
        (Err(_), Some(o)) => o.clone(),
        (Err(_), None) => PathBuf::from(RunConfig::default().out),
    };
    let threads = init_threads(cli.threads);
    let result = match (&cfg, &threads) {
        (Err(e), _) | (_, Err(e)) => Err(CliError::Config(e.clone())),
        (Ok(c), Ok(_)) => fs::create_dir_all(&out).map_err(CliError::from).and_then(|_| dispatch(&cli.command, c, &out)),
    };
    let code = match &result {
        Ok(_) => 0,
        Err(e) => e.exit_code(),
    };
    let manifest = Manifest {
        schema: 1,
        command: cli.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        status: if code == 0 { "ok" } else { "failed" },
        exit_code: code,
        error: result.as_ref().err().map(|e| e.to_string()),
        config: cfg.as_ref().ok(),
        outputs: result.as_ref().cloned().unwrap_or_default(),
        threads: *threads.as_ref().unwrap_or(&1),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let written = fs::create_dir_all(&out).map_err(CliError::from).and_then(|_| commands::write_json(&out.join("manifest.json"), &manifest));
    if let Err(e) = &result {
        eprintln!("homlab: {e}");
    }
    if let Err(e) = written {
        eprintln!("homlab: could not write manifest: {e}");
        return ExitCode::from(if code == 0 { 1 } else { code as u8 });
    }
    ExitCode::from(code as u8)
}
