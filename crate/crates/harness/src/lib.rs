//! Experiment runner for `spde-weak`: JSON configs, an FFT-backed sine
//! transform, a scoped-thread executor and CSV/JSON reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod fft;
pub mod output;
pub mod pool;
pub mod run;

use std::path::{Path, PathBuf};

pub use config::{ExperimentConfig, ExperimentKind};
pub use output::{Metadata, RunOutput};
pub use pool::ThreadExecutor;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] spde_weak::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Seed from the command line, else from the config, else 0.
pub fn resolve_seed(cli: Option<u64>, cfg: &ExperimentConfig) -> u64 {
    cli.or(cfg.mc.seed).unwrap_or(0)
}

/// Loads, runs and writes one experiment; returns the verdict and the files written.
pub fn execute(
    config_path: &Path,
    kind: ExperimentKind,
    seed: Option<u64>,
    out_prefix: &Path,
    threads: usize,
) -> Result<(RunOutput, Vec<PathBuf>), HarnessError> {
    let cfg = ExperimentConfig::from_file(config_path)?;
    let seed = resolve_seed(seed, &cfg);
    let out = run::run(&cfg, kind, seed, &ThreadExecutor::new(threads))?;
    let meta = Metadata::new(kind.name(), seed, cfg.sha256());
    let files = output::write_outputs(&out, &meta, out_prefix)?;
    Ok((out, files))
}
