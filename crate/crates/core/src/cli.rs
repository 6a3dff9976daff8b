//! Command-line front end over [`crate::pipeline`].

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::error::Error;
use crate::pipeline;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_MISSING_INPUT: i32 = 4;
pub const EXIT_SCHEMA: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "sa", version, about = "Situation-awareness prediction pipeline")]
pub struct Cli {
    /// TOML pipeline configuration; defaults apply when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed for generation, fold assignment and training.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
    /// Artifact directory (overrides `paths.out`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate a synthetic study (sessions + ground truth).
    Synth,
    /// Extract window features from sessions into dataset.csv.
    Extract,
    /// Cross-validate and fit the final model.
    Train,
    /// Held-out SHAP values, importance ranking and effect tables.
    Explain,
    /// Incremental feature selection along the ranking.
    Select,
    /// Write report.md from the artifacts.
    Report,
    /// Run every stage in order.
    All,
    /// Print the effective configuration as TOML.
    ShowConfig,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParam(_) => EXIT_CONFIG,
        Error::MissingInput(_) => EXIT_MISSING_INPUT,
        Error::Schema(_) | Error::Malformed { .. } | Error::Json(_) => EXIT_SCHEMA,
        _ => EXIT_FAILURE,
    }
}

fn effective_config(cli: &Cli) -> crate::Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Some(out) = &cli.out {
        cfg.paths.out = out.clone();
    }
    Ok(cfg)
}

fn execute(cli: &Cli, cfg: &PipelineConfig) -> crate::Result<()> {
    match cli.command {
        Command::Synth => pipeline::synth(cfg).map(drop),
        Command::Extract => pipeline::extract(cfg).map(drop),
        Command::Train => pipeline::train(cfg).map(drop),
        Command::Explain => pipeline::explain(cfg).map(drop),
        Command::Select => pipeline::select(cfg).map(drop),
        Command::Report => pipeline::report(cfg).map(|text| print!("{text}")),
        Command::All => pipeline::run_all(cfg).map(|text| print!("{text}")),
        Command::ShowConfig => {
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code. Failures print a one-line diagnostic to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.verbose);
    let result = effective_config(&cli).and_then(|cfg| {
        let threads = cli.threads.map_or(0, usize::from);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidParam(format!("thread pool: {e}")))?;
        pool.install(|| execute(&cli, &cfg))
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("sa: error: {}", e.to_string().replace('\n', " "));
            exit_code(&e)
        }
    }
}
