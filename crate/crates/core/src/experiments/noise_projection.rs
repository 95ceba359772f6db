//! Projection of the linearized stochastic convolution onto the zero mode.
//!
//! Each replica evolves `dW = L_{x0} W dt + a·dα` from `W_0 = 0` with the
//! splitting stepper and records `B_t = ⟨W_t, m̃′⟩` and the remainder
//! `R_t = W_t - B_t m̃′`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::experiments::d_epsilon::compute_d_epsilon;
use crate::experiments::stats::{correlation, linear_fit, quantile, sample_variance};
use crate::grid::dot_weighted;
use crate::linear::LinearPropagator;
use crate::model::instanton_derivative_field;
use crate::noise::{sample_noise, NoiseSource};
use crate::spde::SimConfig;

pub const MIN_PROJECTION_REPLICAS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseProjectionOptions {
    /// Start of the fitting window; the first unit of time is a transient.
    pub t_lo: f64,
    pub t_hi: f64,
    /// Length of the disjoint windows used for the increment correlation.
    pub window: f64,
    /// Noise amplitude `a`; 0 gives the zero-noise control.
    pub amplitude: f64,
}

impl Default for NoiseProjectionOptions {
    fn default() -> Self {
        Self {
            t_lo: 1.0,
            t_hi: 10.0,
            window: 1.0,
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseProjectionReport {
    pub d_epsilon: f64,
    /// Pooled `Σ (ΔB)² / Σ Δt` over the fitting window.
    pub variance_rate: f64,
    /// Standard error of `variance_rate` under Gaussian increments.
    pub variance_rate_stderr: f64,
    /// Slope of the across-replica variance of `B_t` against `t` (free intercept).
    pub variance_regression_slope: f64,
    /// Lag-one correlation of `B` increments over consecutive windows.
    pub increment_correlation: f64,
    pub remainder_sup_p99: f64,
    pub remainder_sup_max: f64,
    pub n_replicas: usize,
    pub record_times: Vec<f64>,
    pub per_time_variance: Vec<f64>,
    /// Largest `|B_t|` over all replicas and records.
    pub max_abs_projection: f64,
}

struct ReplicaPath {
    b: Vec<f64>,
    remainder_sup: Vec<f64>,
}

pub fn noise_projection_check(
    config: &SimConfig,
    x0: f64,
    n_replicas: usize,
    options: &NoiseProjectionOptions,
) -> Result<NoiseProjectionReport> {
    if n_replicas < MIN_PROJECTION_REPLICAS {
        return Err(Error::InsufficientData(format!(
            "{n_replicas} replicas, need {MIN_PROJECTION_REPLICAS}"
        )));
    }
    let o = options;
    if !(0.0 <= o.t_lo && o.t_lo < o.t_hi) {
        return Err(invalid("t_lo", "need 0 <= t_lo < t_hi"));
    }
    if !(o.window > 0.0) || o.window > o.t_hi - o.t_lo {
        return Err(invalid(
            "window",
            "must be positive and fit in [t_lo, t_hi]",
        ));
    }
    let grid = config.grid()?;
    let epsilon = grid.epsilon();
    let d_epsilon = compute_d_epsilon(epsilon, &grid, x0)?;
    let dt = config.dt;
    let prop = LinearPropagator::new(&grid, x0, dt)?;
    let mode = instanton_derivative_field(&grid, x0, true);
    let stride = config.record_stride;
    let rec_dt = stride as f64 * dt;
    let n_records = (o.t_hi / rec_dt).round() as usize;

    let paths: Vec<ReplicaPath> = (0..n_replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut src = NoiseSource::new(config.seed, r);
            let mut w = vec![0.0; grid.n_nodes()];
            let mut b = vec![0.0];
            let mut remainder_sup = vec![0.0];
            for _ in 0..n_records {
                for _ in 0..stride {
                    let slice = sample_noise(&grid, dt, &mut src);
                    prop.step(
                        &mut w,
                        0.0,
                        Some((slice.components[0].values(), o.amplitude * dt)),
                    );
                }
                let bt = dot_weighted(&grid, &w, mode.values());
                let rs = w
                    .iter()
                    .zip(mode.values())
                    .fold(0.0f64, |m, (a, e)| m.max((a - bt * e).abs()));
                b.push(bt);
                remainder_sup.push(rs);
            }
            ReplicaPath { b, remainder_sup }
        })
        .collect();

    let times: Vec<f64> = (0..=n_records).map(|k| k as f64 * rec_dt).collect();
    let in_window: Vec<usize> = (0..=n_records)
        .filter(|&k| times[k] >= o.t_lo - 1e-9 && times[k] <= o.t_hi + 1e-9)
        .collect();
    let (k_lo, k_hi) = (in_window[0], *in_window.last().unwrap());

    let mut sq = 0.0;
    let mut count = 0usize;
    for p in &paths {
        for k in k_lo..k_hi {
            sq += (p.b[k + 1] - p.b[k]).powi(2);
            count += 1;
        }
    }
    let span = times[k_hi] - times[k_lo];
    let variance_rate = sq / (n_replicas as f64 * span);
    let variance_rate_stderr = variance_rate * (2.0 / count as f64).sqrt();

    let per_time_variance: Vec<f64> = (0..=n_records)
        .map(|k| {
            let v: Vec<f64> = paths.iter().map(|p| p.b[k]).collect();
            sample_variance(&v)
        })
        .collect();
    let wt: Vec<f64> = in_window.iter().map(|&k| times[k]).collect();
    let wv: Vec<f64> = in_window.iter().map(|&k| per_time_variance[k]).collect();
    let (_, variance_regression_slope) = linear_fit(&wt, &wv);

    let per_window = (o.window / rec_dt).round() as usize;
    let n_windows = (k_hi - k_lo) / per_window.max(1);
    let (mut first, mut second) = (Vec::new(), Vec::new());
    for p in &paths {
        let inc: Vec<f64> = (0..n_windows)
            .map(|j| p.b[k_lo + (j + 1) * per_window] - p.b[k_lo + j * per_window])
            .collect();
        for j in 0..n_windows.saturating_sub(1) {
            first.push(inc[j]);
            second.push(inc[j + 1]);
        }
    }
    let increment_correlation = if first.len() >= 2 {
        correlation(&first, &second)
    } else {
        f64::NAN
    };

    let final_rem: Vec<f64> = paths.iter().map(|p| p.remainder_sup[k_hi]).collect();
    let remainder_sup_max = paths
        .iter()
        .flat_map(|p| p.remainder_sup.iter().cloned())
        .fold(0.0, f64::max);
    let max_abs_projection = paths
        .iter()
        .flat_map(|p| p.b.iter().map(|b| b.abs()))
        .fold(0.0, f64::max);

    Ok(NoiseProjectionReport {
        d_epsilon,
        variance_rate,
        variance_rate_stderr,
        variance_regression_slope,
        increment_correlation,
        remainder_sup_p99: quantile(&final_rem, 0.99),
        remainder_sup_max,
        n_replicas,
        record_times: times,
        per_time_variance,
        max_abs_projection,
    })
}
