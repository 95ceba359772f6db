//! TOML run configuration.
//!
//! ```toml
//! epsilon = 0.05
//! lambda = 1.0
//! experiment = "diffusion"
//! # optional, with defaults
//! dx = 0.1                 # dt = dx/4, record_stride = round(0.1/dt)
//! half_length = 20.0       # 1/epsilon
//! t_end = 20.0             # 1/epsilon, or max(tau_grid)/epsilon for diffusion
//! seed = 0
//! mode = "coupled"         # or "single"
//! initial = { kind = "instanton", x0 = 0.0 }
//! output_dir = "out"
//!
//! [options]
//! n_replicas = 200
//! tau_grid = [0.25, 0.5, 0.75, 1.0]
//! ```
//!
//! Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use twinfront::spde::default_record_stride;
use twinfront::{Initial, Mode, SimConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    Track,
    Spectrum,
    LinearDecay,
    Diffusion,
    NoiseProjection,
    VerifyComparison,
    VerifyBarrier,
    VerifyBounded,
    DEpsilon,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Track => "track",
            Self::Spectrum => "spectrum",
            Self::LinearDecay => "linear-decay",
            Self::Diffusion => "diffusion",
            Self::NoiseProjection => "noise-projection",
            Self::VerifyComparison => "verify-comparison",
            Self::VerifyBarrier => "verify-barrier",
            Self::VerifyBounded => "verify-bounded",
            Self::DEpsilon => "d-epsilon",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryFormat {
    Csv,
    Binary,
}

/// Experiment parameters that are not part of the simulation itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    pub n_replicas: usize,
    pub tau_grid: Vec<f64>,
    pub n_seeds: usize,
    /// Initial gap `m_a - m_b` of the comparison experiment.
    pub offset: f64,
    pub n_eigen: usize,
    pub trajectory_format: TrajectoryFormat,
    pub barrier_radius_base: f64,
    pub barrier_speed: f64,
    pub barrier_horizons: [f64; 5],
    pub projection_t_lo: f64,
    pub projection_t_hi: f64,
    pub projection_window: f64,
    pub projection_amplitude: f64,
    pub decay_t_end: f64,
    pub decay_dt: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            n_replicas: 200,
            tau_grid: vec![0.25, 0.5, 0.75, 1.0],
            n_seeds: 20,
            offset: 0.1,
            n_eigen: 5,
            trajectory_format: TrajectoryFormat::Csv,
            barrier_radius_base: 0.0,
            barrier_speed: 3.0,
            barrier_horizons: [1.0, 2.0, 3.0, 4.0, 5.0],
            projection_t_lo: 1.0,
            projection_t_hi: 10.0,
            projection_window: 1.0,
            projection_amplitude: 1.0,
            decay_t_end: 5.0,
            decay_dt: 0.01,
        }
    }
}

/// Configuration as written in the file; `None` means "use the default".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub epsilon: f64,
    pub lambda: f64,
    pub dx: Option<f64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub initial: Option<Initial>,
    pub half_length: Option<f64>,
    pub record_stride: Option<usize>,
    pub experiment: Option<Experiment>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub options: Options,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub sim: SimConfig,
    pub output_dir: Option<PathBuf>,
    pub options: Options,
}

impl RunConfig {
    /// Center of the initial instanton, or 0 for other initial data.
    pub fn x0(&self) -> f64 {
        match self.sim.initial {
            Initial::Instanton { x0 } => x0,
            _ => 0.0,
        }
    }
}

/// `unknown field `foo`` → `foo`
fn backticked(message: &str) -> Option<String> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, CliError> {
    let file: FileConfig = toml::from_str(text).map_err(|e| CliError::Config {
        key: backticked(e.message()),
        message: e.message().trim().to_string(),
    })?;
    resolve(file)
}

pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config_str(&text)
}

/// Applies the defaults `dx = 0.1`, `dt = dx/4`, `record_stride = round(0.1/dt)`,
/// `half_length = 1/ε` and validates the result.
pub fn resolve(file: FileConfig) -> Result<RunConfig, CliError> {
    let mut sim = SimConfig::new(file.epsilon, file.lambda);
    sim.dx = file.dx.unwrap_or(0.1);
    sim.dt = file.dt.unwrap_or(sim.dx / 4.0);
    sim.record_stride = file
        .record_stride
        .unwrap_or_else(|| default_record_stride(sim.dt));
    sim.seed = file.seed.unwrap_or(0);
    sim.mode = file.mode.unwrap_or(Mode::Coupled);
    sim.initial = file.initial.unwrap_or(Initial::Instanton { x0: 0.0 });
    sim.half_length = file.half_length;
    let tau_max = file.options.tau_grid.iter().cloned().fold(0.0, f64::max);
    sim.t_end = match (file.t_end, file.experiment) {
        (Some(t), _) => t,
        (None, Some(Experiment::Diffusion)) if file.epsilon > 0.0 => tau_max / file.epsilon,
        (None, _) => sim.t_end,
    };
    sim.validate()?;
    let o = &file.options;
    if o.n_eigen == 0 {
        return Err(CliError::key("n_eigen", "must be at least 1"));
    }
    if o.n_seeds == 0 {
        return Err(CliError::key("n_seeds", "must be at least 1"));
    }
    Ok(RunConfig {
        experiment: file.experiment,
        sim,
        output_dir: file.output_dir,
        options: file.options,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c =
            parse_config_str("epsilon = 0.05\nlambda = 1\nexperiment = \"diffusion\"\n").unwrap();
        assert_eq!(c.experiment, Some(Experiment::Diffusion));
        assert_eq!(c.sim.dx, 0.1);
        assert_eq!(c.sim.dt, 0.025);
        assert_eq!(c.sim.record_stride, 4);
        assert_eq!(c.sim.grid().unwrap().half_length(), 20.0);
        assert_eq!(c.sim.t_end, 20.0);
        assert_eq!(c.options, Options::default());
    }

    #[test]
    fn invariant_violation_names_the_key() {
        let e = parse_config_str("epsilon = 0.05\nlambda = 1\ndt = 1\ndx = 0.1\n").unwrap_err();
        assert_eq!(e.key_name(), Some("dt"));
    }

    #[test]
    fn unknown_and_duplicate_keys_are_rejected() {
        let e = parse_config_str("epsilon = 0.05\nlambda = 1\nlamda = 2\n").unwrap_err();
        assert_eq!(e.key_name(), Some("lamda"));
        let e =
            parse_config_str("epsilon = 0.05\nlambda = 1\n[options]\nn_replica = 3\n").unwrap_err();
        assert_eq!(e.key_name(), Some("n_replica"));
        assert!(parse_config_str("epsilon = 0.05\nepsilon = 0.1\nlambda = 1\n").is_err());
    }

    #[test]
    fn tables_for_initial_data() {
        let c = parse_config_str(
            "epsilon = 0.1\nlambda = 0.5\nmode = \"single\"\ninitial = { kind = \"instanton\", x0 = 1.5 }\n",
        )
        .unwrap();
        assert_eq!(c.sim.mode, Mode::Single);
        assert_eq!(c.x0(), 1.5);
        assert!(
            parse_config_str("epsilon = 0.1\nlambda = 1\ninitial = { kind = \"kink\" }\n").is_err()
        );
        let typo = "epsilon = 0.1\nlambda = 1\ninitial = { kind = \"instanton\", x_0 = 1.0 }\n";
        assert!(parse_config_str(typo).is_err());
    }

    #[test]
    fn experiment_names_match_subcommands() {
        for e in [
            Experiment::LinearDecay,
            Experiment::DEpsilon,
            Experiment::VerifyBounded,
        ] {
            let json = serde_json::to_string(&e).unwrap();
            assert_eq!(json, format!("\"{}\"", e.name()));
        }
    }
}
