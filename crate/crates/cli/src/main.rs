//! `scatmap`: Melnikov predictions, brute-force scattering maps, generating
//! functions and Gronwall horizons from a TOML experiment file.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ConfigError, Format, RunConfig};
use output::Writer;

#[derive(Debug, Parser)]
#[command(
    name = "scatmap",
    version,
    about = "Scattering maps of rotator-pendulum systems"
)]
struct Cli {
    /// TOML experiment file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parameter sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Comma-separated eps values, overriding `experiment.eps`.
    #[arg(long = "eps-grid", global = true)]
    eps_grid: Option<String>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// First-order splitting, action and angle changes per sample.
    Melnikov,
    /// Brute-force scattering map over the eps grid against the predictions.
    Scatter,
    /// Critical point of the Melnikov potential and the generating function.
    Hamgen,
    /// Deviation of perturbed and unperturbed flows over logarithmic horizons.
    Gronwall,
    /// Unperturbed identity suite and fast cross-module checks.
    Selftest,
}

fn parse_eps_grid(s: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| {
                    ConfigError(format!("--eps-grid: {t:?} is not a non-negative number"))
                })
        })
        .collect()
}

fn resolve(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(g) = &cli.eps_grid {
        cfg.experiment.eps = parse_eps_grid(g)?;
    }
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.display().to_string();
    }
    if let Some(f) = cli.format {
        cfg.output.format = f;
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(ConfigError("--threads must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| ConfigError(format!("--threads: {e}")))?;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<commands::Outcome> {
    let cfg = resolve(cli)?;
    let writer = Writer::new(std::path::Path::new(&cfg.output.dir), cfg.output.format)?;
    match cli.command {
        Command::Melnikov => commands::cmd_melnikov(&cfg, &writer),
        Command::Scatter => commands::cmd_scatter(&cfg, &writer),
        Command::Hamgen => commands::cmd_hamgen(&cfg, &writer),
        Command::Gronwall => commands::cmd_gronwall(&cfg, &writer),
        Command::Selftest => commands::cmd_selftest(&cfg, &writer),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if outcome.failures == 0 {
                ExitCode::SUCCESS
            } else {
                eprintln!(
                    "{} row(s) or check(s) failed; see the report",
                    outcome.failures
                );
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
