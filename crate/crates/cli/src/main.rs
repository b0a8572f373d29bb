mod commands;
mod config;
mod error;
mod reference;
mod report;

use clap::{Args, Parser, Subcommand};
use commands::{Outcome, Progress};
use config::*;
use cqc_core::boundary::SimulationMode;
use cqc_core::census::ChainKind;
use cqc_core::thresholds::NoiseClass;
use error::CliError;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cqc", version, about = "Noisy commuting circuits on the RHG lattice: census, thresholds, boundary")]
struct Cli {
    /// JSON config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Where to write the JSON report (default: standard output).
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Suppress progress on standard error.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact chain counts around the injection site.
    Census(CensusArgs),
    /// Threshold constants and roots.
    Thresholds(ThresholdArgs),
    /// Complexity landscape over (φ, q).
    Landscape(LandscapeArgs),
    /// Monte Carlo parity or classical boundary sampling.
    Simulate(SimulateArgs),
    /// Hoeffding verdict on an observed mean cell parity.
    Verify(VerifyArgs),
    /// Simulators against their dense oracles.
    OracleCheck(OracleArgs),
    /// Run a pinned manifest and diff against reference values.
    Reproduce(ReproduceArgs),
}

#[derive(Args, Serialize)]
struct CensusArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    max_len: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    side: Option<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
    #[serde(skip_serializing_if = "Option::is_none")]
    kinds: Option<Vec<ChainKind>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    hard_cap: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    prefix_depth: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<Format>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Args, Serialize)]
struct ThresholdArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    all: bool,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    census_len: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    side: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    max_k: Option<u32>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<Format>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Args, Serialize)]
struct LandscapeArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    phi_points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    q_points: Option<usize>,
    /// `distillation`, `depth-four` or a number.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    magic_bound: Option<MagicBound>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    census_len: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    side: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<Format>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    curves_out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<SimTarget>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    dims: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    boundary: Option<BoundaryKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    rows: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cols: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[arg(long, value_parser = parse_mode)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<SimulationMode>,
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    compare_dense: bool,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    shots: Option<u64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<Format>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mean: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cells: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    /// `dephasing-1local` or `depolarizing`.
    #[arg(long, value_parser = parse_noise_class)]
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_class: Option<NoiseClass>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Args, Serialize)]
struct OracleArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cases: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    max_qubits: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    boundary_shots: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Args, Serialize)]
struct ReproduceArgs {
    #[arg(value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    manifest: Option<ManifestId>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    max_len: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    side: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    shots: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    q_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    dims: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    phi_points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    q_points: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

fn parse_kind(s: &str) -> Result<ChainKind, String> {
    s.parse().map_err(|e: cqc_core::CqcError| e.to_string())
}

fn parse_json_enum<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|e| e.to_string())
}

fn parse_mode(s: &str) -> Result<SimulationMode, String> {
    parse_json_enum(s)
}

fn parse_noise_class(s: &str) -> Result<NoiseClass, String> {
    parse_json_enum(s)
}

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    let file = cli.config.as_deref().map(read_config_file).transpose()?;
    let progress = Progress { quiet: cli.quiet };
    match &cli.command {
        Command::Census(a) => commands::census(&resolve("census", file, a)?, &progress),
        Command::Thresholds(a) => commands::thresholds(&resolve("thresholds", file, a)?, &progress),
        Command::Landscape(a) => commands::landscape_cmd(&resolve("landscape", file, a)?, &progress),
        Command::Simulate(a) => commands::simulate(&resolve("simulate", file, a)?, &progress),
        Command::Verify(a) => commands::verify(&resolve("verify", file, a)?),
        Command::OracleCheck(a) => commands::oracle(&resolve("oracle-check", file, a)?, &progress),
        Command::Reproduce(a) => commands::reproduce(&resolve("reproduce", file, a)?, &progress),
    }
}

/// Write artifacts, then the report. Standard output carries the CSV
/// artifact when it has no path, otherwise the report.
fn write_outputs(cli: &Cli, outcome: &Outcome) -> Result<(), CliError> {
    let mut stdout_taken = false;
    if let Some((format, text, path)) = &outcome.artifact {
        match (path, format) {
            (Some(p), _) => report::emit(Some(p), text)?,
            (None, Format::Csv) => {
                report::emit(None, text)?;
                stdout_taken = true;
            }
            // JSON artifacts without a path are already inside the report.
            (None, Format::Json) => {}
        }
    }
    for (path, text) in &outcome.extra {
        report::emit(Some(path), text)?;
    }
    match (&cli.report, stdout_taken) {
        (Some(p), _) => report::emit(Some(p), &outcome.report.to_json()),
        (None, false) => report::emit(None, &outcome.report.to_json()),
        (None, true) => Ok(()),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    }
    let outcome = dispatch(cli)?;
    write_outputs(cli, &outcome)?;
    match outcome.failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => {
            eprintln!("{}", CliError::config(e.to_string().trim_end()).to_json());
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code as u8)
        }
    }
}
