//! Batch pipeline behind the `stylfacts` binary.

pub mod analyze;
pub mod config;
pub mod io;
pub mod report;
pub mod simulate_cmd;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use analyze::{run_analyze, AnalyzeOutcome};
pub use config::{AssetInput, RunConfig, SEED_ENV};
pub use report::{AssetReport, REPORT_SCHEMA, REPORT_SCHEMA_VERSION};
pub use simulate_cmd::{run_simulate, SimulateArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(String),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Exit status when at least one asset could not be analyzed.
pub const EXIT_ASSET_FAILED: i32 = 1;
/// Exit status for configuration and usage errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "stylfacts",
    version,
    about = "Test the stylized facts of financial returns"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the fact suite on the assets listed in a config file.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Restrict the run to these asset ids (repeatable).
        #[arg(long = "asset")]
        assets: Vec<String>,
        /// Output directory; overrides `out_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Assets processed concurrently; overrides `workers` in the config.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Write a synthetic OHLCV path as CSV.
    Simulate(SimulateArgs),
    /// Rebuild summary.csv from the per-asset reports in a directory.
    Report {
        #[arg(long)]
        merge: PathBuf,
        /// Where to write the summary; `<merge>/summary.csv` when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Executes a parsed command line and returns the process exit status.
pub fn run(cli: Cli, seed_override: Option<String>) -> i32 {
    match execute(cli, seed_override) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Config(_) | CliError::Usage(_) => EXIT_USAGE,
                _ => EXIT_ASSET_FAILED,
            }
        }
    }
}

fn execute(cli: Cli, seed_override: Option<String>) -> Result<i32, CliError> {
    match cli.command {
        Command::Analyze {
            config,
            assets,
            out,
            workers,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            cfg.apply_seed_override(seed_override.as_deref())?;
            cfg.select_assets(&assets)?;
            let out_dir = out.or_else(|| cfg.out_dir.clone()).ok_or_else(|| {
                CliError::Config("no output directory: pass --out or set out_dir".into())
            })?;
            let workers = workers.or(cfg.workers).unwrap_or(1);
            if workers == 0 {
                return Err(CliError::Usage("--workers must be at least 1".into()));
            }
            let outcome = run_analyze(&cfg, &out_dir, workers)?;
            for r in &outcome.reports {
                if let Some(err) = &r.error {
                    eprintln!("asset {} failed: {err}", r.asset_id);
                }
            }
            eprintln!(
                "analyzed {} asset(s), {} failed; reports in {}",
                outcome.reports.len(),
                outcome.failed_assets(),
                outcome.out_dir.display()
            );
            Ok(if outcome.failed_assets() > 0 {
                EXIT_ASSET_FAILED
            } else {
                0
            })
        }
        Command::Simulate(args) => {
            let bytes = run_simulate(&args)?;
            match &args.out {
                Some(path) => io::write_atomic(path, &bytes)?,
                None => {
                    use std::io::Write;
                    std::io::stdout()
                        .write_all(&bytes)
                        .map_err(|e| CliError::Io(e.to_string()))?;
                }
            }
            Ok(0)
        }
        Command::Report { merge, out } => {
            let out = out.unwrap_or_else(|| merge.join("summary.csv"));
            let n = report::merge_reports(&merge, &out)?;
            eprintln!("merged {n} report(s) into {}", out.display());
            Ok(0)
        }
    }
}
