//! Batch front-end for `efc-core`: reads an experiment config, runs one
//! command and writes tables plus a `manifest.json` under the output
//! directory.
//!
//! Exit codes: 0 success, 2 invalid config or characteristics, 3 numerical
//! failure, 4 I/O failure.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use chrono::{SecondsFormat, Utc};
use clap::{Parser, Subcommand};
use efc_core::Execution;

use crate::commands::{Context, Outcome};
use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;
use crate::output::{sha256_hex, InputDigest, OutputDir, RunRecord};

/// Overrides the output root from the config; `--out` still wins.
pub const OUT_DIR_ENV: &str = "EFC_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "efc-out";

#[derive(Debug, Parser)]
#[command(name = "efc", version, about = "Exchangeable fragmentation-coagulation experiments")]
pub struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Master seed for stochastic commands; overrides the config.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Table format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check the characteristics and write validation.json.
    Validate,
    /// Dump the generator of the restricted chain.
    Rates,
    /// Stationary law and equilibrium diagnostics.
    Stationary,
    /// Transient law and distance to stationarity.
    Transient,
    /// Ensemble of simulated paths.
    Simulate,
    /// Dust count chain on [n].
    DustChain,
    /// Exact event-driven dust proportion.
    DustSde,
    /// Hitting time of 1 for the block-count chain.
    Logistic,
    /// Coming-down-from-infinity diagnostic.
    Cdi,
    /// Rate compatibility across restriction levels.
    CompatCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Validate => "validate",
            Self::Rates => "rates",
            Self::Stationary => "stationary",
            Self::Transient => "transient",
            Self::Simulate => "simulate",
            Self::DustChain => "dust-chain",
            Self::DustSde => "dust-sde",
            Self::Logistic => "logistic",
            Self::Cdi => "cdi",
            Self::CompatCheck => "compat-check",
        }
    }
}

/// Runs the parsed command line and returns the process exit code. Messages
/// go to stdout on success and stderr otherwise.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok(outcome) => {
            if outcome.exit_code == 0 {
                println!("{}: {}", cli.command.name(), outcome.message);
            } else {
                eprintln!("{}: {}", cli.command.name(), outcome.message);
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("{}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let started_at = now();
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let (config, bytes) = ExperimentConfig::load(config_path)?;

    let threads = cli.threads.or(config.threads);
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        // Fails only if a pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let exec = if threads == Some(1) {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let format = cli.format.or(config.format).unwrap_or_default();
    let root = cli
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let seed = cli.seed.or(config.seed);

    let mut out = OutputDir::create(&root, format)?;
    let ctx = Context {
        config: &config,
        seed,
        exec,
    };
    let result = dispatch(cli.command, &ctx, &mut out);
    let exit_code = match &result {
        Ok(o) => o.exit_code,
        Err(e) => e.exit_code(),
    };
    let record = RunRecord {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name().into(),
        seed,
        threads,
        format,
        input: InputDigest {
            path: config_path.display().to_string(),
            sha256: sha256_hex(&bytes),
        },
        config: serde_json::to_value(&config).map_err(|e| CliError::Config(e.to_string()))?,
        started_at,
        finished_at: now(),
        exit_code,
        files: out.files().to_vec(),
    };
    out.finish(&record)?;
    result
}

fn dispatch(command: Command, ctx: &Context, out: &mut OutputDir) -> Result<Outcome, CliError> {
    if command == Command::Validate {
        return commands::validate(ctx, out);
    }
    commands::require_valid(&ctx.config.characteristics)?;
    match command {
        Command::Validate => unreachable!("handled above"),
        Command::Rates => commands::rates(ctx, out),
        Command::Stationary => commands::stationary(ctx, out),
        Command::Transient => commands::transient(ctx, out),
        Command::Simulate => commands::simulate(ctx, out),
        Command::DustChain => commands::dust_chain(ctx, out),
        Command::DustSde => commands::dust_sde(ctx, out),
        Command::Logistic => commands::logistic(ctx, out),
        Command::Cdi => commands::cdi(ctx, out),
        Command::CompatCheck => commands::compat_check(ctx, out),
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}
