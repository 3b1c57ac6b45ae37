//! Batch front end for the threewave library: TOML experiment configs,
//! figure presets, parameter sweeps and CSV/JSON/SVG output with a
//! checksummed run manifest.

pub mod config;
pub mod error;
mod experiment;
pub mod manifest;
pub mod presets;
pub mod svg;
pub mod sweep;

use std::path::Path;
use std::time::Instant;

pub use config::{ConfigFile, ExperimentConfig, Format, Kind};
pub use error::{CliError, Result};
pub use experiment::{DIVERGENCE_THRESHOLD, PROBABILITY_CELL_LIMIT};
pub use manifest::{RunManifest, MANIFEST_FILE};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads for sweeps; `None` uses every core.
    pub jobs: Option<usize>,
}

/// Outcome of [`run`]: the manifest plus non-fatal warnings.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub warnings: Vec<String>,
}

/// Validates `config`, runs its experiments in order into `out_dir`, and
/// writes `manifest.json` once every artifact is on disk.
pub fn run(config: &ConfigFile, out_dir: &Path, opts: &RunOptions) -> Result<RunOutcome> {
    config.validate()?;
    if opts.jobs == Some(0) {
        return Err(CliError::usage("jobs", "must be at least 1"));
    }
    let start = Instant::now();
    let mut out = manifest::OutputDir::create(out_dir)?;
    let mut warnings = Vec::new();
    for e in &config.experiment {
        let mut ctx = experiment::Ctx {
            out: &mut out,
            warnings: &mut warnings,
            jobs: opts.jobs,
        };
        experiment::run_experiment(e, &mut ctx)?;
    }
    let manifest = out.finish(config.clone(), start.elapsed().as_secs_f64())?;
    Ok(RunOutcome { manifest, warnings })
}
