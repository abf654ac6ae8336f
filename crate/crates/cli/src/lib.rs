//! Command-line front end for `randlink`: experiment configs, model files and
//! reports. The `randlink` binary is a thin wrapper over [`run`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod model_io;
pub mod report;

use config::{load_config, ExperimentConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "randlink", version, about = "Randomized neural network experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by every config-driven command; flags override the file.
#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Method id, e.g. rvfl, edrvfl, dsp-rvfl.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Ensemble combination rule: vote or average.
    #[arg(long)]
    pub combine: Option<String>,
}

impl Common {
    pub fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = load_config(&self.config)?;
        let here = std::path::Path::new(".");
        let mut set = |key: &str, value: String| {
            cfg.set(key, &value, here)
                .map_err(|e| CliError::Usage(format!("--{}: {e}", key.rsplit('.').next().unwrap_or(key))))
        };
        if let Some(s) = self.seed {
            set("seed", s.to_string())?;
        }
        if let Some(m) = &self.method {
            set("method", m.clone())?;
        }
        if let Some(k) = self.k {
            set("cv.k", k.to_string())?;
        }
        if let Some(c) = &self.combine {
            set("ensemble.combine", c.clone())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on the full dataset and save a model file.
    Train(Common),
    /// Label the rows of a CSV file with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// The CSV has a header row.
        #[arg(long)]
        header: bool,
        /// Label column (index, header name or `last`); enables accuracy.
        #[arg(long)]
        labels: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// k-fold cross-validation report.
    Cv(Common),
    /// Hyperparameter grid search report.
    Grid(Common),
    /// Friedman and Nemenyi comparison of report files.
    Compare {
        #[arg(required = true, num_args = 1..)]
        reports: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Median training and test times over layer counts.
    Bench(Common),
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(c) => commands::train_cmd(&c.load()?, c.out),
        Command::Predict {
            model,
            data,
            header,
            labels,
            out,
        } => commands::predict_cmd(&model, &data, header, labels.as_deref(), out),
        Command::Cv(c) => commands::cv_cmd(&c.load()?, c.out),
        Command::Grid(c) => commands::grid_cmd(&c.load()?, c.out),
        Command::Compare { reports, alpha, out } => commands::compare_cmd(&reports, alpha, out),
        Command::Bench(c) => commands::bench_cmd(&c.load()?, c.out),
    }
}

/// Applies `RANDLINK_THREADS` to the global worker pool.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("RANDLINK_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("RANDLINK_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))
}
