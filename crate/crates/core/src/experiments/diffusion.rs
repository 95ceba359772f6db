//! Monte Carlo estimate of the diffusion coefficient of the front center in
//! the rescaled time `τ = ε t`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::center::CenterTracker;
use crate::error::{invalid, Error, Result};
use crate::experiments::stats::{mean, sample_variance, slope_through_origin};
use crate::noise::NoiseSource;
use crate::spde::{Initial, Integrator, SimConfig};

/// Runs with a larger share of improper center frames are rejected.
pub const MAX_IMPROPER_FRACTION: f64 = 0.05;

/// Center displacements `X_τ = ξ_{τ/ε} - x0` of an ensemble of replicas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterEnsemble {
    pub config: SimConfig,
    pub x0: f64,
    /// Simulation time per unit of `τ`: `1/ε`, or `t_end / max τ` when `ε = 0`.
    pub time_unit: f64,
    pub tau_grid: Vec<f64>,
    /// `displacements[r][k]` is `X_{τ_k}` of replica `r`; `None` when the
    /// center of that frame was not proper.
    pub displacements: Vec<Vec<Option<f64>>>,
    /// Every frame whose center was solved (the record stride plus the τ grid).
    pub tracked_frames: usize,
    pub improper_frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionEstimate {
    pub d_hat: f64,
    /// `d_hat · √(2/(n-1))`, the Gaussian-increment standard error.
    pub stderr: f64,
    pub n_replicas: usize,
    pub tau_grid: Vec<f64>,
    pub per_tau_variance: Vec<f64>,
    pub per_tau_mean: Vec<f64>,
    /// Replicas with a proper center at each τ.
    pub per_tau_count: Vec<usize>,
    pub tracked_frames: usize,
    pub improper_frames: usize,
}

struct ReplicaCenters {
    displacements: Vec<Option<f64>>,
    tracked: usize,
    improper: usize,
}

fn validate_tau_grid(tau_grid: &[f64]) -> Result<()> {
    if tau_grid.is_empty() {
        return Err(invalid("tau_grid", "must not be empty"));
    }
    if tau_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(invalid("tau_grid", "entries must be positive"));
    }
    if tau_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("tau_grid", "must be strictly increasing"));
    }
    Ok(())
}

/// Simulates `n_replicas` replicas from `m̄_{x0}` and records the center
/// displacement at every `τ` of `tau_grid`.
pub fn run_center_ensemble(
    config: &SimConfig,
    n_replicas: usize,
    tau_grid: &[f64],
) -> Result<CenterEnsemble> {
    validate_tau_grid(tau_grid)?;
    let x0 = match config.initial {
        Initial::Instanton { x0 } => x0,
        _ => return Err(invalid("initial", "diffusion runs start from an instanton")),
    };
    if n_replicas < 2 {
        return Err(Error::InsufficientData(format!(
            "{n_replicas} replicas, need at least 2"
        )));
    }
    let tau_max = *tau_grid.last().unwrap();
    let time_unit = if config.epsilon > 0.0 {
        1.0 / config.epsilon
    } else {
        config.t_end / tau_max
    };
    if config.t_end < time_unit * tau_max - 0.5 * config.dt {
        return Err(invalid(
            "t_end",
            format!("must reach τ = {tau_max}, i.e. t = {}", time_unit * tau_max),
        ));
    }
    let integrator = Integrator::new(config)?;
    let targets: Vec<usize> = tau_grid
        .iter()
        .map(|tau| (tau * time_unit / config.dt).round() as usize)
        .collect();
    let last = *targets.last().unwrap();
    let stride = config.record_stride;
    let mode = config.mode;

    let runs: Vec<ReplicaCenters> = (0..n_replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<ReplicaCenters> {
            let mut source = NoiseSource::new(config.seed, r);
            let mut state = integrator.initial_state()?;
            let mut tracker = CenterTracker::new(x0);
            let mut out = ReplicaCenters {
                displacements: Vec::with_capacity(targets.len()),
                tracked: 0,
                improper: 0,
            };
            let mut next = 0;
            for k in 1..=last {
                integrator.step(&mut state, &mut source)?;
                let at_target = targets[next] == k;
                if k % stride == 0 || at_target {
                    let est = tracker.observe(&state.front(mode));
                    out.tracked += 1;
                    if !est.proper {
                        out.improper += 1;
                    }
                    if at_target {
                        out.displacements.push(est.proper.then_some(est.xi - x0));
                        next += 1;
                        // coinciding targets share one frame
                        while next < targets.len() && targets[next] == k {
                            out.displacements.push(est.proper.then_some(est.xi - x0));
                            next += 1;
                        }
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    Ok(CenterEnsemble {
        config: config.clone(),
        x0,
        time_unit,
        tau_grid: tau_grid.to_vec(),
        tracked_frames: runs.iter().map(|r| r.tracked).sum(),
        improper_frames: runs.iter().map(|r| r.improper).sum(),
        displacements: runs.into_iter().map(|r| r.displacements).collect(),
    })
}

impl CenterEnsemble {
    pub fn n_replicas(&self) -> usize {
        self.displacements.len()
    }

    pub fn improper_fraction(&self) -> f64 {
        self.improper_frames as f64 / self.tracked_frames.max(1) as f64
    }

    /// Proper displacements at `τ_k`.
    pub fn at(&self, k: usize) -> Vec<f64> {
        self.displacements.iter().filter_map(|d| d[k]).collect()
    }

    /// Least-squares fit of `Var(X_τ) = d·τ` through the origin.
    pub fn estimate(&self) -> Result<DiffusionEstimate> {
        let fraction = self.improper_fraction();
        if fraction > MAX_IMPROPER_FRACTION {
            return Err(Error::TooManyImproper {
                fraction,
                limit: MAX_IMPROPER_FRACTION,
            });
        }
        let mut var = Vec::with_capacity(self.tau_grid.len());
        let mut means = Vec::with_capacity(self.tau_grid.len());
        let mut counts = Vec::with_capacity(self.tau_grid.len());
        for k in 0..self.tau_grid.len() {
            let xs = self.at(k);
            if xs.len() < 2 {
                return Err(Error::InsufficientData(format!(
                    "{} proper replicas at τ = {}",
                    xs.len(),
                    self.tau_grid[k]
                )));
            }
            var.push(sample_variance(&xs));
            means.push(mean(&xs));
            counts.push(xs.len());
        }
        let n = self.n_replicas();
        let d_hat = slope_through_origin(&self.tau_grid, &var);
        Ok(DiffusionEstimate {
            d_hat,
            stderr: d_hat * (2.0 / (n - 1) as f64).sqrt(),
            n_replicas: n,
            tau_grid: self.tau_grid.clone(),
            per_tau_variance: var,
            per_tau_mean: means,
            per_tau_count: counts,
            tracked_frames: self.tracked_frames,
            improper_frames: self.improper_frames,
        })
    }

    /// `(X_{τ_to} - X_{τ_from}) / √(d·Δτ)` for every replica proper at both
    /// times; `from = None` starts at `τ = 0` where `X = 0`.
    pub fn standardized_increments(&self, from: Option<usize>, to: usize, d: f64) -> Vec<f64> {
        let t0 = from.map_or(0.0, |k| self.tau_grid[k]);
        let scale = (d * (self.tau_grid[to] - t0)).sqrt();
        self.displacements
            .iter()
            .filter_map(|x| {
                let a = match from {
                    Some(k) => x[k]?,
                    None => 0.0,
                };
                Some((x[to]? - a) / scale)
            })
            .collect()
    }
}

/// Runs the ensemble and fits the diffusion coefficient.
pub fn estimate_diffusion(
    config: &SimConfig,
    n_replicas: usize,
    tau_grid: &[f64],
) -> Result<DiffusionEstimate> {
    run_center_ensemble(config, n_replicas, tau_grid)?.estimate()
}
