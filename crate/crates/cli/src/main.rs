//! `flowtube`: reactor design, RTD fitting, kinetics, TOF mass-spectrometry
//! workflow and synthetic data generation.

mod config;
mod design;
mod error;
mod format;
mod kinetics;
mod ms;
mod rtd_fit;
mod simulate;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::ConfigFile;
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "flowtube",
    version,
    about = "Design and analysis toolkit for dual-arm flow-tube reactors"
)]
struct Cli {
    /// TOML file with one table per command; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report layout on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Aligned tables, six significant digits.
    Text,
    /// JSON at full precision.
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Residence time, flow balance, restrictor sizing and flow regime.
    Design(design::DesignArgs),
    /// Fit RTD models to tracer traces.
    RtdFit(rtd_fit::RtdFitArgs),
    /// Fit exponential kinetic traces and derive rate coefficients.
    Kinetics(kinetics::KineticsArgs),
    /// Calibrate, assign and classify a set of TOF spectra.
    Ms(ms::MsArgs),
    /// Generate synthetic traces and spectra.
    #[command(subcommand)]
    Simulate(simulate::SimulateCommand),
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = ConfigFile::load(cli.config.as_deref())?;
    match cli.command {
        Command::Design(a) => design::run(&cfg.merge("design", &a)?, cli.format, out),
        Command::RtdFit(a) => rtd_fit::run(&cfg.merge("rtd_fit", &a)?, cli.format, out),
        Command::Kinetics(a) => kinetics::run(&cfg.merge("kinetics", &a)?, cli.format, out),
        Command::Ms(a) => ms::run(&cfg.merge("ms", &a)?, cli.format, out),
        Command::Simulate(c) => simulate::run(c, &cfg, cli.format, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

/// Writes `value` as pretty JSON followed by a newline.
pub fn write_json<T: serde::Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value)
        .map_err(|e| CliError::input(format!("json: {e}")))?;
    writeln!(out)?;
    Ok(())
}

/// Parses comma-separated lists given to repeatable flags.
pub fn split_list(values: &[String]) -> Result<Vec<f64>, CliError> {
    values
        .iter()
        .flat_map(|v| v.split(','))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::input(format!("`{s}` is not a number")))
        })
        .collect()
}
