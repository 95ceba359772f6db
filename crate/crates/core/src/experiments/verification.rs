//! Same-noise comparison, barrier, sup-norm boundedness and instanton
//! closeness experiments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::center::CenterTracker;
use crate::error::{invalid, Result};
use crate::grid::Field;
use crate::model::instanton_field;
use crate::noise::NoiseSource;
use crate::spde::{simulate_with, CoupledState, Initial, Integrator, SimConfig};

/// Ordering violations smaller than this are rounding.
pub const COMPARISON_TOLERANCE: f64 = 1e-8;

/// Sup norm that counts as a boundedness violation.
pub const BOUNDEDNESS_LEVEL: f64 = 2.0;

/// Largest admissible initial sup norm for the boundedness experiment.
pub fn boundedness_initial_limit(lambda: f64) -> f64 {
    1.0 + 1.0 / (32.0 * (2.0 + lambda))
}

fn replica_range(n_seeds: usize) -> rayon::range::Iter<u64> {
    (0..n_seeds as u64).into_par_iter()
}

fn min_difference(a: &CoupledState, b: &CoupledState) -> f64 {
    let pairs = [(&a.m1, &b.m1), (&a.m2, &b.m2)];
    pairs
        .iter()
        .flat_map(|(x, y)| x.values().iter().zip(y.values()).map(|(p, q)| p - q))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub config: SimConfig,
    pub offset: f64,
    /// Minimum over seeds, steps, nodes and components of `m_a - m_b`.
    pub min_difference: f64,
    pub per_seed_min: Vec<f64>,
    pub n_seeds: usize,
    pub passed: bool,
}

/// Runs `m_b` from `config.initial` and `m_a = m_b + offset` with the same
/// noise and records the smallest `m_a - m_b` at every step.
pub fn run_comparison_experiment(
    config: &SimConfig,
    offset: f64,
    n_seeds: usize,
) -> Result<ComparisonReport> {
    if !(offset >= 0.0) {
        return Err(invalid("offset", "must be nonnegative"));
    }
    if n_seeds == 0 {
        return Err(invalid("n_seeds", "must be at least 1"));
    }
    let integrator = Integrator::new(config)?;
    let per_seed_min: Vec<f64> = replica_range(n_seeds)
        .map(|r| -> Result<f64> {
            let mut source = NoiseSource::new(config.seed, r);
            let mut b = integrator.initial_state()?;
            let mut a = CoupledState::new(0.0, b.m1.map(|v| v + offset), b.m2.map(|v| v + offset))?;
            let mut lowest = min_difference(&a, &b);
            for _ in 0..config.n_steps() {
                let noise = integrator.draw_noise(&mut source);
                integrator.advance(&mut a, noise.as_ref(), config.seed, r)?;
                integrator.advance(&mut b, noise.as_ref(), config.seed, r)?;
                lowest = lowest.min(min_difference(&a, &b));
            }
            Ok(lowest)
        })
        .collect::<Result<_>>()?;
    let min_difference = per_seed_min.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(ComparisonReport {
        config: config.clone(),
        offset,
        min_difference,
        per_seed_min,
        n_seeds,
        passed: min_difference >= -COMPARISON_TOLERANCE,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierOptions {
    /// Agreement radius `r0 + speed·T`.
    pub radius_base: f64,
    pub speed: f64,
    pub horizons: [f64; 5],
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            radius_base: 0.0,
            speed: 3.0,
            horizons: [1.0, 2.0, 3.0, 4.0, 5.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierRow {
    pub horizon: f64,
    pub radius: f64,
    /// `max_{t ≤ T} max_i |m_i(0,t) - m*_i(0,t)|`.
    pub center_discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierReport {
    pub config: SimConfig,
    pub rows: Vec<BarrierRow>,
    /// Least-squares slope of `ln(discrepancy)` against `T` over the rows
    /// above `1e-14`; NaN when fewer than two qualify.
    pub log_slope: f64,
}

/// Reference run from `config.initial`; the perturbed run agrees with it on
/// `|x| ≤ radius` and is sign-flipped outside. Both see the same noise.
pub fn barrier_discrepancy(config: &SimConfig, radius: f64, horizon: f64) -> Result<f64> {
    if !(radius >= 0.0) || !(horizon > 0.0) {
        return Err(invalid("radius", "need radius >= 0 and horizon > 0"));
    }
    let mut c = config.clone();
    c.t_end = horizon;
    let integrator = Integrator::new(&c)?;
    let grid = *integrator.grid();
    let j0 = grid.nearest_node(0.0);
    let mut source = NoiseSource::new(c.seed, 0);
    let mut a = integrator.initial_state()?;
    let flip = |f: &Field| {
        let v = f
            .values()
            .iter()
            .enumerate()
            .map(|(j, &m)| if grid.x(j).abs() <= radius { m } else { -m })
            .collect();
        Field::new(grid, v)
    };
    let mut b = CoupledState::new(0.0, flip(&a.m1)?, flip(&a.m2)?)?;
    let mut worst = 0.0f64;
    for _ in 0..c.n_steps() {
        let noise = integrator.draw_noise(&mut source);
        integrator.advance(&mut a, noise.as_ref(), c.seed, 0)?;
        integrator.advance(&mut b, noise.as_ref(), c.seed, 0)?;
        let d1 = (a.m1.values()[j0] - b.m1.values()[j0]).abs();
        let d2 = (a.m2.values()[j0] - b.m2.values()[j0]).abs();
        worst = worst.max(d1).max(d2);
    }
    Ok(worst)
}

pub fn run_barrier_experiment(
    config: &SimConfig,
    options: &BarrierOptions,
) -> Result<BarrierReport> {
    let rows: Vec<BarrierRow> = options
        .horizons
        .par_iter()
        .map(|&horizon| {
            let radius = options.radius_base + options.speed * horizon;
            Ok(BarrierRow {
                horizon,
                radius,
                center_discrepancy: barrier_discrepancy(config, radius, horizon)?,
            })
        })
        .collect::<Result<_>>()?;
    let usable: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.center_discrepancy > 1e-14)
        .map(|r| (r.horizon, r.center_discrepancy.ln()))
        .collect();
    let log_slope = if usable.len() >= 2 {
        let (t, y): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
        crate::experiments::stats::linear_fit(&t, &y).1
    } else {
        f64::NAN
    };
    Ok(BarrierReport {
        config: config.clone(),
        rows,
        log_slope,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessReport {
    pub config: SimConfig,
    /// Largest sup norm of either component over every step, per seed.
    pub per_seed_max_sup: Vec<f64>,
    pub exceed_fraction: f64,
    pub n_seeds: usize,
}

fn state_sup(s: &CoupledState) -> f64 {
    s.m1.sup_norm().max(s.m2.sup_norm())
}

/// Fraction of seeds whose sup norm exceeds 2 at some step up to `t_end`.
pub fn run_boundedness_experiment(config: &SimConfig, n_seeds: usize) -> Result<BoundednessReport> {
    if n_seeds == 0 {
        return Err(invalid("n_seeds", "must be at least 1"));
    }
    let integrator = Integrator::new(config)?;
    let limit = boundedness_initial_limit(config.lambda);
    let start = state_sup(&integrator.initial_state()?);
    if start > limit {
        return Err(invalid(
            "initial",
            format!("initial sup norm {start} exceeds {limit}"),
        ));
    }
    let per_seed_max_sup: Vec<f64> = replica_range(n_seeds)
        .map(|r| -> Result<f64> {
            let mut source = NoiseSource::new(config.seed, r);
            let mut s = integrator.initial_state()?;
            let mut worst = state_sup(&s);
            for _ in 0..config.n_steps() {
                integrator.step(&mut s, &mut source)?;
                worst = worst.max(state_sup(&s));
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    let exceeded = per_seed_max_sup
        .iter()
        .filter(|&&m| m > BOUNDEDNESS_LEVEL)
        .count();
    Ok(BoundednessReport {
        config: config.clone(),
        exceed_fraction: exceeded as f64 / n_seeds as f64,
        per_seed_max_sup,
        n_seeds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosenessReport {
    pub config: SimConfig,
    /// Largest whole-domain sup distance of either component to `m̄_{ξ_t}`
    /// over the recorded frames; infinite when a frame had no proper center.
    pub per_seed_max_distance: Vec<f64>,
    pub threshold: f64,
    /// Fraction of seeds staying below `threshold`.
    pub fraction_within: f64,
    /// Fraction of seeds staying below 0.25.
    pub fraction_within_quarter: f64,
    pub n_seeds: usize,
}

/// Distance of both components to the instanton at the tracked center, for
/// every recorded frame up to `t_end`, with threshold `ε^{1/4}`.
pub fn run_closeness_experiment(config: &SimConfig, n_seeds: usize) -> Result<ClosenessReport> {
    if n_seeds == 0 {
        return Err(invalid("n_seeds", "must be at least 1"));
    }
    let x0 = match config.initial {
        Initial::Instanton { x0 } => x0,
        _ => return Err(invalid("initial", "closeness runs start from an instanton")),
    };
    let grid = config.grid()?;
    let per_seed_max_distance: Vec<f64> = replica_range(n_seeds)
        .map(|r| -> Result<f64> {
            let mut tracker = CenterTracker::new(x0);
            let mut worst = 0.0f64;
            simulate_with(config, r, |s| {
                let est = tracker.observe(&s.front(config.mode));
                if !est.proper {
                    worst = f64::INFINITY;
                    return;
                }
                let bar = instanton_field(&grid, est.xi);
                let d1 = s.m1.sub(&bar).sup_norm();
                let d2 = s.m2.sub(&bar).sup_norm();
                worst = worst.max(d1).max(d2);
            })?;
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    let threshold = config.epsilon.powf(0.25);
    let within =
        |t: f64| per_seed_max_distance.iter().filter(|&&d| d < t).count() as f64 / n_seeds as f64;
    Ok(ClosenessReport {
        config: config.clone(),
        fraction_within: within(threshold),
        fraction_within_quarter: within(0.25),
        threshold,
        per_seed_max_distance,
        n_seeds,
    })
}
