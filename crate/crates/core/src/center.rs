//! The center `ξ(m)` of a front-like field, defined by the orthogonality
//! condition `⟨m - m̄_ξ, m̄′_ξ⟩ = 0`, and its tracking along trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};
use crate::linear::BOUNDARY_COLLAR;
use crate::spde::{simulate_with, Initial, SimConfig, Trajectory};

/// Largest `|m - m̄_ξ|` on `|x - ξ| <= PROPER_RADIUS` for which the center is proper.
pub const PROPER_THRESHOLD: f64 = 0.5;
pub const PROPER_RADIUS: f64 = 5.0;

const NEWTON_MAX_ITER: usize = 50;
const CONVERGED_RESIDUAL: f64 = 1e-10;
const SCAN_STEP: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterEstimate {
    pub xi: f64,
    /// Center functional at `xi`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// A converged root inside the window where `m` is close to `m̄_xi`.
    /// When no root exists `xi` is reported as 0.
    pub proper: bool,
}

fn window(grid: &Grid1D) -> f64 {
    grid.half_length() - BOUNDARY_COLLAR
}

/// `(F(ξ), F'(ξ))` with `F(ξ) = ∫ (m - m̄_ξ) m̄′_ξ`. Differentiating in ξ gives
/// `F' = ⟨m̄′_ξ, m̄′_ξ⟩ - ⟨m - m̄_ξ, m̄″_ξ⟩` with `m̄″ = -2 tanh sech²`.
fn functional(m: &Field, xi: f64) -> (f64, f64) {
    let grid = m.grid();
    let v = m.values();
    let n = grid.n_nodes();
    let (mut f, mut df) = (0.0, 0.0);
    for (j, &mj) in v.iter().enumerate() {
        let z = grid.x(j) - xi;
        let t = z.tanh();
        let s = 1.0 - t * t;
        let w = if j == 0 || j + 1 == n { 0.5 } else { 1.0 };
        let d = mj - t;
        f += w * d * s;
        df += w * (s * s + 2.0 * d * t * s);
    }
    (f * grid.dx(), df * grid.dx())
}

/// `⟨m - m̄_ξ, m̄′_ξ⟩` by trapezoid quadrature over the whole grid.
pub fn center_residual(m: &Field, xi: f64) -> Result<f64> {
    let w = window(m.grid());
    if !(xi.abs() <= w) {
        return Err(Error::OutOfWindow { xi, window: w });
    }
    Ok(functional(m, xi).0)
}

fn proper_near(m: &Field, xi: f64) -> bool {
    let grid = m.grid();
    let v = m.values();
    (0..grid.n_nodes())
        .filter(|&j| (grid.x(j) - xi).abs() <= PROPER_RADIUS)
        .all(|j| (v[j] - (grid.x(j) - xi).tanh()).abs() <= PROPER_THRESHOLD)
}

fn finish(m: &Field, xi: f64, residual: f64, iterations: usize) -> CenterEstimate {
    let converged = residual.abs() <= CONVERGED_RESIDUAL;
    CenterEstimate {
        xi,
        residual,
        iterations,
        converged,
        proper: converged && xi.abs() <= window(m.grid()) && proper_near(m, xi),
    }
}

fn newton(m: &Field, guess: f64, w: f64) -> Option<(f64, f64, usize)> {
    let mut xi = guess.clamp(-w, w);
    let mut last_step = f64::INFINITY;
    for it in 1..=NEWTON_MAX_ITER {
        let (f, df) = functional(m, xi);
        if f.abs() <= 1e-13 {
            return Some((xi, f, it));
        }
        if !(df > 1e-8) {
            return None;
        }
        let step = (f / df).clamp(-1.0, 1.0);
        // a step that does not shrink signals cycling
        if it > 10 && step.abs() >= last_step {
            let (f, _) = functional(m, xi);
            return (f.abs() <= CONVERGED_RESIDUAL).then_some((xi, f, it));
        }
        last_step = step.abs();
        xi -= step;
        if xi.abs() > w {
            return None;
        }
        if step.abs() < 1e-14 {
            let (f, _) = functional(m, xi);
            return Some((xi, f, it));
        }
    }
    let (f, _) = functional(m, xi);
    (f.abs() <= CONVERGED_RESIDUAL).then_some((xi, f, NEWTON_MAX_ITER))
}

/// Scans the window for sign changes of `F` from negative to positive and
/// bisects the one nearest to `guess`.
fn scan_bisect(m: &Field, guess: f64, w: f64) -> Option<(f64, f64, usize)> {
    let cells = (2.0 * w / SCAN_STEP).ceil() as usize;
    let h = 2.0 * w / cells as f64;
    let nodes: Vec<f64> = (0..=cells).map(|i| -w + i as f64 * h).collect();
    let vals: Vec<f64> = nodes.iter().map(|&x| functional(m, x).0).collect();
    let mut best: Option<(f64, f64)> = None;
    for i in 0..cells {
        if vals[i] <= 0.0 && vals[i + 1] > 0.0 {
            let mid = 0.5 * (nodes[i] + nodes[i + 1]);
            if best.is_none_or(|(b, _)| (mid - guess).abs() < (b - guess).abs()) {
                best = Some((nodes[i], nodes[i + 1]));
            }
        }
    }
    let (mut lo, mut hi) = best?;
    let mut evals = cells + 1;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let f = functional(m, mid).0;
        evals += 1;
        if f <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    let xi = 0.5 * (lo + hi);
    Some((xi, functional(m, xi).0, evals))
}

/// Solves the center equation from `guess`: Newton with the analytic
/// derivative, falling back to a scan plus bisection when Newton leaves the
/// window or stalls.
pub fn find_center(m: &Field, guess: f64) -> CenterEstimate {
    let w = window(m.grid());
    if let Some((xi, f, it)) = newton(m, guess, w) {
        let est = finish(m, xi, f, it);
        if est.proper {
            return est;
        }
        if let Some((xs, fs, evals)) = scan_bisect(m, guess, w) {
            let alt = finish(m, xs, fs, it + evals);
            if alt.proper {
                return alt;
            }
        }
        return est;
    }
    match scan_bisect(m, guess, w) {
        Some((xi, f, evals)) => finish(m, xi, f, NEWTON_MAX_ITER + evals),
        None => CenterEstimate {
            xi: 0.0,
            residual: functional(m, 0.0).0,
            iterations: NEWTON_MAX_ITER,
            converged: false,
            proper: false,
        },
    }
}

/// First-order center `x0 - (3/4) ⟨m̄′_{x0}, m - m̄_{x0}⟩` near `m̄_{x0}`.
pub fn linearized_center(m: &Field, x0: f64) -> f64 {
    let grid = m.grid();
    let n = grid.n_nodes();
    let mut s = 0.0;
    for (j, &mj) in m.values().iter().enumerate() {
        let t = (grid.x(j) - x0).tanh();
        let w = if j == 0 || j + 1 == n { 0.5 } else { 1.0 };
        s += w * (1.0 - t * t) * (mj - t);
    }
    x0 - 0.75 * s * grid.dx()
}

/// Center of `(m1 + m2)/2` on every frame, each solve warm-started from the
/// last proper center (`x0` for the first frame).
pub fn track_center(trajectory: &Trajectory, x0: f64) -> Vec<(f64, CenterEstimate)> {
    let mut guess = x0;
    trajectory
        .frames
        .iter()
        .map(|s| {
            let est = find_center(&s.average(), guess);
            if est.proper {
                guess = est.xi;
            }
            (s.t, est)
        })
        .collect()
}

/// Incremental tracker for use inside a simulation observer.
#[derive(Debug, Clone)]
pub struct CenterTracker {
    guess: f64,
}

impl CenterTracker {
    pub fn new(x0: f64) -> Self {
        Self { guess: x0 }
    }

    pub fn observe(&mut self, m: &Field) -> CenterEstimate {
        let est = find_center(m, self.guess);
        if est.proper {
            self.guess = est.xi;
        }
        est
    }
}

/// Runs replica `replica` of `config` and tracks the front (the average in
/// coupled mode, `m1` in single mode) on every recorded frame, starting from
/// the instanton center of the initial data (0 otherwise).
pub fn simulate_center_path(
    config: &SimConfig,
    replica: u64,
) -> Result<Vec<(f64, CenterEstimate)>> {
    let x0 = match config.initial {
        Initial::Instanton { x0 } => x0,
        _ => 0.0,
    };
    let mut tracker = CenterTracker::new(x0);
    let mut path = Vec::new();
    simulate_with(config, replica, |s| {
        path.push((s.t, tracker.observe(&s.front(config.mode))));
    })?;
    Ok(path)
}
