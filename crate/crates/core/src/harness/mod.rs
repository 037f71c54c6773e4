//! Experiment configuration, orchestration and CSV emission.

mod config;
mod experiments;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{
    CoalitionSettings, ContentionSettings, ExperimentConfig, ExperimentKind, Fig3Settings, MatchingSettings,
    PowerSettings, Sweep,
};
pub use experiments::{fig3_rows, run_experiment, Fig3Row};

use crate::error::NomaError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("{0}")]
    Validation(NomaError),
    #[error("{0}")]
    Runtime(NomaError),
    #[error("post-processing check failed: {0}")]
    Check(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl HarnessError {
    /// 1 for configuration problems, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Parse(_) | HarnessError::Validation(_) => 1,
            HarnessError::Runtime(_) | HarnessError::Check(_) | HarnessError::Io(_) => 2,
        }
    }
}

impl From<NomaError> for HarnessError {
    fn from(e: NomaError) -> Self {
        HarnessError::Runtime(e)
    }
}

/// Formats a float with 9 significant digits in scientific notation.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

/// Loads, validates and runs the config at `path`, writing the CSV to
/// `out` (or the configured `output_path`, or stdout when neither is set).
/// Returns where the CSV went.
pub fn run_config_file(
    path: &Path,
    seed: Option<u64>,
    out: Option<&Path>,
    oracle: bool,
) -> Result<Option<PathBuf>, HarnessError> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = seed {
        config.override_seed(seed);
    }
    config.validate()?;
    let csv = run_experiment(&config, oracle)?;
    let target = out.map(Path::to_path_buf).or_else(|| config.output_path.clone());
    match &target {
        Some(p) => std::fs::write(p, csv).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?,
        None => print!("{csv}"),
    }
    Ok(target)
}
