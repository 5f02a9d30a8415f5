//! Command-line driver for the `medgate` simulator.
//!
//! ```text
//! simulate <mode> --config <file> [--set key=value ...] --out <dir> --seed <u64> --threads <n>
//! ```
//!
//! Every mode writes one or more long-format CSV files and a
//! `<mode>.meta.json` sidecar into the output directory.

pub mod config;
pub mod modes;
pub mod output;

use std::path::{Path, PathBuf};

use clap::Parser;

pub use config::{ConfigError, Layers, Mode, RunConfig};
pub use modes::{run_mode, ModeOutput};
pub use output::{Cell, Metadata, Table};

#[derive(Debug, Clone, Parser)]
#[command(name = "simulate", version, about = "Entangling-gate sweeps for the mediated spin gate")]
pub struct Cli {
    /// dynamic-map, adiabatic-map, spectrum, cphase-scan, decoherence or interference
    pub mode: Mode,

    /// Flat TOML file of key = value settings
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Override a setting, e.g. --set tau=250 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Output directory (created if missing)
    #[arg(long)]
    pub out: PathBuf,

    /// Seed for Monte Carlo estimates (overrides the `seed` key)
    #[arg(long)]
    pub seed: Option<u64>,

    /// Worker threads (default: all cores)
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub points: usize,
    pub failed: usize,
    pub files: Vec<PathBuf>,
}

impl Summary {
    /// Every grid point failed.
    pub fn total_failure(&self) -> bool {
        self.points > 0 && self.failed == self.points
    }
}

/// Merges defaults, the config file, `MEDGATE_*` variables, `--set` and
/// `--seed` into a validated configuration.
pub fn load_config(cli: &Cli, env: impl Fn(&str) -> Option<String>) -> Result<RunConfig, RunError> {
    let mut layers = Layers::new();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|source| RunError::Io { context: format!("reading {}", path.display()), source })?;
        layers.apply_file(&path.display().to_string(), &text)?;
    }
    layers.apply_env(env)?;
    for arg in &cli.overrides {
        layers.apply_set(arg)?;
    }
    if let Some(seed) = cli.seed {
        let seed = i64::try_from(seed).map_err(|_| ConfigError {
            origin: config::Origin::Flag(format!("--seed {seed}")),
            message: "seed must be below 2^63".into(),
        })?;
        layers.insert_value("seed", toml::Value::Integer(seed), config::Origin::Flag(format!("--seed {seed}")))?;
    }
    Ok(RunConfig::from_resolved(cli.mode, layers.resolve()?)?)
}

/// Runs a configured mode on a pool of `threads` workers and writes its
/// tables and metadata into `out`.
pub fn execute(cfg: &RunConfig, out: &Path, threads: usize) -> Result<Summary, RunError> {
    let io = |context: String| move |source| RunError::Io { context, source };
    std::fs::create_dir_all(out).map_err(io(format!("creating {}", out.display())))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| RunError::Io { context: "starting worker pool".into(), source: std::io::Error::other(e) })?;
    let result = pool.install(|| run_mode(cfg));
    let mut files = Vec::new();
    for table in &result.tables {
        files.push(table.write(out).map_err(io(format!("writing {}", table.file_name())))?);
    }
    let meta = Metadata::new(cfg, threads, &result.tables, result.points, result.failed, &result.notes);
    files.push(meta.write(out).map_err(io("writing metadata".into()))?);
    Ok(Summary { points: result.points, failed: result.failed, files })
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
