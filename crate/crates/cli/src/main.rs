//! Command-line runner: JSON experiment configs in, CSV tables plus a
//! JSON run manifest out.
//!
//! Exit codes: 0 on success, 1 when a numerical adequacy guard rejects the
//! requested discretization (widen the grid or raise the cutoff), 2 for
//! malformed configs, bad arguments, or I/O failures. On failure nothing
//! is written.

mod config;
mod run;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use config::ExperimentConfig;
use run::{CliError, GridSummary, RunOutcome};

#[derive(Parser)]
#[command(
    name = "cvteleport",
    version,
    about = "Teleportation-based wavelength-conversion experiments on truncated Fock spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config; writes a CSV table and a run manifest.
    Run(RunArgs),
    /// Print the JSON schema of the experiment config format.
    Schema,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (JSON).
    config: PathBuf,
    /// Output directory for the CSV and manifest; defaults to the current
    /// directory. Created if missing.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker thread count; defaults to the number of cores. Results are
    /// byte-identical for any value.
    #[arg(long)]
    threads: Option<usize>,
    /// Override the config's random seed (Monte-Carlo experiments only).
    #[arg(long)]
    seed: Option<u64>,
}

/// Everything the run depended on, written next to the CSV. Only
/// `wall_time_seconds` varies between identical runs.
#[derive(Serialize)]
struct Manifest<'a> {
    artifact: &'static str,
    version: &'static str,
    schema_version: u32,
    experiment: &'static str,
    config_sha256: String,
    csv_path: &'a str,
    rows: usize,
    cutoff: Option<usize>,
    grid: Option<GridSummary>,
    seed: Option<u64>,
    threads: Option<usize>,
    wall_time_seconds: f64,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => match run_command(&args) {
            Ok(summary) => {
                println!("{summary}");
                ExitCode::SUCCESS
            }
            Err(err) => {
                eprintln!("error: {}", err.message());
                ExitCode::from(err.exit_code())
            }
        },
        Command::Schema => {
            print!("{}", include_str!("../schema/config.schema.json"));
            ExitCode::SUCCESS
        }
    }
}

fn run_command(args: &RunArgs) -> Result<String, CliError> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }

    let started = Instant::now();
    let raw = std::fs::read(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let config: ExperimentConfig = serde_json::from_slice(&raw)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    if config.output_path.is_empty() {
        return Err(CliError::Config("output_path must not be empty".into()));
    }

    let outcome = run::execute(&config, args.seed)?;

    let dir = args.output.clone().unwrap_or_else(|| PathBuf::from("."));
    let csv_path = dir.join(&config.output_path);
    let manifest_path = csv_path.with_extension("manifest.json");
    if let Some(parent) = csv_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| {
                CliError::Config(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
    }

    let manifest = manifest_text(&config, &raw, &outcome, args, started.elapsed().as_secs_f64());
    std::fs::write(&csv_path, outcome.csv())
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", csv_path.display())))?;
    std::fs::write(&manifest_path, manifest)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", manifest_path.display())))?;

    Ok(format!(
        "wrote {} ({} rows) and {}",
        csv_path.display(),
        outcome.rows.len(),
        manifest_path.display()
    ))
}

fn manifest_text(
    config: &ExperimentConfig,
    raw_config: &[u8],
    outcome: &RunOutcome,
    args: &RunArgs,
    wall_time_seconds: f64,
) -> String {
    let digest = Sha256::digest(raw_config);
    let manifest = Manifest {
        artifact: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        schema_version: 1,
        experiment: config.experiment.name(),
        config_sha256: format!("{digest:x}"),
        csv_path: &config.output_path,
        rows: outcome.rows.len(),
        cutoff: outcome.cutoff,
        grid: outcome.grid,
        seed: outcome.seed,
        threads: args.threads,
        wall_time_seconds,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    text
}
