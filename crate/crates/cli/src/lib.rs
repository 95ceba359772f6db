//! Configuration, dispatch and run manifests behind the `twinfront` binary.

pub mod commands;
pub mod config;
pub mod error;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{parse_config, parse_config_str, Experiment, RunConfig};
pub use error::CliError;

pub const OUT_DIR_ENV: &str = "TWINFRONT_OUT_DIR";
pub const MANIFEST_NAME: &str = "manifest.json";

/// Record of one run: enough to reproduce every numeric artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Experiment,
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
    /// Artifact file names relative to the output directory.
    pub outputs: Vec<String>,
    pub output_dir: PathBuf,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        Ok(twinfront::io::read_json(path)?)
    }
}

/// Runs `experiment` and writes its artifacts plus `manifest.json` to `out`.
pub fn execute(
    experiment: Experiment,
    cfg: &RunConfig,
    out: &Path,
) -> Result<RunManifest, CliError> {
    if let Some(declared) = cfg.experiment {
        if declared != experiment {
            return Err(CliError::key(
                "experiment",
                format!(
                    "config declares `{}` but `{}` was requested",
                    declared.name(),
                    experiment.name()
                ),
            ));
        }
    }
    std::fs::create_dir_all(out).map_err(|e| CliError::Io {
        path: out.to_path_buf(),
        message: e.to_string(),
    })?;
    let start = Instant::now();
    let outputs = commands::run(experiment, cfg, out)?;
    let manifest = RunManifest {
        command: experiment,
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.sim.seed,
        config: cfg.clone(),
        outputs,
        output_dir: out.to_path_buf(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    twinfront::io::write_json(&out.join(MANIFEST_NAME), &manifest)?;
    Ok(manifest)
}

/// `--out`, then the config, then the environment variable, then `twinfront-out`.
pub fn output_dir(flag: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("twinfront-out"))
}
