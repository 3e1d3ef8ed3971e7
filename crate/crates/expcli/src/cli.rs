//! Command line entry point.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration or usage error,
//! 3 numerical failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{ConfigError, ExperimentConfig, ExperimentId};
use crate::experiments::{self, RunError};
use crate::output::write_run;
use crate::plot::{plot_files, PlotError};

pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "kryres", version, about = "Krylov complexity and quantum reservoir experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its CSV tables and metadata.
    Run {
        experiment: ExperimentId,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        full_scale: bool,
    },
    /// Render columns of a CSV file as SVG.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        spec: PathBuf,
    },
}

fn exit_code(e: &RunError) -> i32 {
    match e {
        RunError::Config(_) => EXIT_CONFIG,
        RunError::Numerical(_) => EXIT_NUMERICAL,
        RunError::Io(_) => EXIT_IO,
    }
}

/// Loads the config file and applies command line overrides.
pub fn load_config(
    experiment: ExperimentId,
    path: &std::path::Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
    full_scale: bool,
) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::parse(experiment, &text)?;
    if let Some(o) = out {
        cfg.out = o;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = threads {
        cfg.threads = t;
    }
    cfg.full_scale |= full_scale;
    cfg.validate()?;
    Ok(cfg)
}

fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| RunError::Io(format!("thread pool: {e}")))?;
    let out = pool.install(|| experiments::run(cfg))?;
    let mut written = write_run(cfg, &out, &cfg.out, cfg.threads)?;
    if cfg.experiment == ExperimentId::E6 {
        let p = cfg.out.join("e6_dataset.txt");
        let text = pool.install(|| experiments::e6_dataset_text(cfg))?;
        std::fs::write(&p, text).map_err(|e| RunError::Io(format!("{}: {e}", p.display())))?;
        written.push(p);
    }
    Ok(written)
}

pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match cli.command {
        Command::Run {
            experiment,
            config,
            out,
            seed,
            threads,
            full_scale,
        } => {
            let cfg = match load_config(experiment, &config, out, seed, threads, full_scale) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_CONFIG;
                }
            };
            match run_experiment(&cfg) {
                Ok(paths) => {
                    for p in paths {
                        println!("{}", p.display());
                    }
                    0
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            }
        }
        Command::Plot { csv, spec } => match plot_files(&csv, &spec) {
            Ok(p) => {
                println!("{}", p.display());
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                match e {
                    PlotError::Io(_) => EXIT_IO,
                    _ => EXIT_CONFIG,
                }
            }
        },
    }
}
