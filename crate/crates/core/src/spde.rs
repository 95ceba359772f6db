//! Splitting integrator for the coupled stochastic Allen–Cahn system
//!
//! ```text
//! ∂_t m_i = ½ ∂_xx m_i - V'(m_i) + λ (m_j - m_i) + √ε α̇_i
//! ```
//!
//! with Neumann boundaries. Each step applies the reaction, coupling and
//! noise increment explicitly and then solves one backward-Euler diffusion
//! system, so the noise is smoothed by the heat step as in the mild form.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{build_grid, dot_weighted, Field, Grid1D, HeatStep};
use crate::model::{instanton_field, potential, potential_d1};
use crate::noise::{sample_noise, NoiseSlice, NoiseSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Both components evolve and attract each other.
    Coupled,
    /// Only `m1` evolves, without coupling; `m2` is carried unchanged.
    Single,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    /// Both components start at `tanh(x - x0)`.
    Instanton { x0: f64 },
    /// Explicit node values for both components.
    Fields { m1: Vec<f64>, m2: Vec<f64> },
    /// Both components start at a constant.
    Constant { value: f64 },
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Noise strength; also sets the default domain half-length `1/epsilon`.
    pub epsilon: f64,
    pub lambda: f64,
    pub dx: f64,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    pub record_stride: usize,
    pub mode: Mode,
    pub initial: Initial,
    /// Overrides `1/epsilon` as the domain half-length.
    pub half_length: Option<f64>,
}

impl SimConfig {
    /// Coupled run from the centered instanton with the default resolution:
    /// `dx = 0.1`, `dt = dx/4`, frames every `0.1` time units, `t_end = 1/ε`.
    pub fn new(epsilon: f64, lambda: f64) -> Self {
        let dx = 0.1;
        let dt = dx / 4.0;
        Self {
            epsilon,
            lambda,
            dx,
            dt,
            t_end: if epsilon > 0.0 { 1.0 / epsilon } else { 10.0 },
            seed: 0,
            record_stride: default_record_stride(dt),
            mode: Mode::Coupled,
            initial: Initial::Instanton { x0: 0.0 },
            half_length: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(invalid("epsilon", "must be a nonnegative number"));
        }
        if self.epsilon == 0.0 && self.half_length.is_none() {
            return Err(invalid("half_length", "required when epsilon = 0"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(invalid("lambda", "must be nonnegative"));
        }
        if !(self.dx > 0.0) {
            return Err(invalid("dx", "must be positive"));
        }
        if !(self.dt > 0.0) {
            return Err(invalid("dt", "must be positive"));
        }
        if self.dt > self.dx {
            return Err(invalid(
                "dt",
                format!("dt = {} exceeds dx = {}", self.dt, self.dx),
            ));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(invalid("t_end", "must be positive"));
        }
        if self.record_stride == 0 {
            return Err(invalid("record_stride", "must be at least 1"));
        }
        let grid = self.grid()?;
        if let Initial::Fields { m1, m2 } = &self.initial {
            if m1.len() != grid.n_nodes() || m2.len() != grid.n_nodes() {
                return Err(invalid(
                    "initial",
                    format!("fields must have {} nodes", grid.n_nodes()),
                ));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid1D> {
        let eps_for_grid = if self.epsilon > 0.0 {
            self.epsilon
        } else {
            1.0 / self.half_length.unwrap_or(f64::NAN)
        };
        build_grid(eps_for_grid, self.dx, self.half_length)
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Frames every 0.1 time units.
pub fn default_record_stride(dt: f64) -> usize {
    ((0.1 / dt).round() as usize).max(1)
}

/// Simulation time and both components on a shared grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledState {
    pub t: f64,
    pub m1: Field,
    pub m2: Field,
}

impl CoupledState {
    pub fn new(t: f64, m1: Field, m2: Field) -> Result<Self> {
        if m1.grid() != m2.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { t, m1, m2 })
    }

    pub fn grid(&self) -> &Grid1D {
        self.m1.grid()
    }

    /// `(m1 + m2)/2`, the field whose center is tracked.
    pub fn average(&self) -> Field {
        self.m1.lincomb(0.5, &self.m2, 0.5)
    }

    /// The field carrying the front: the average in coupled mode, `m1` alone
    /// in single mode.
    pub fn front(&self, mode: Mode) -> Field {
        match mode {
            Mode::Coupled => self.average(),
            Mode::Single => self.m1.clone(),
        }
    }

    /// Both components exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            t: self.t,
            m1: self.m2.clone(),
            m2: self.m1.clone(),
        }
    }
}

/// Recorded frames of one run, starting with the initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub frames: Vec<CoupledState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn last(&self) -> Option<&CoupledState> {
        self.frames.last()
    }
}

/// Deterministic right-hand side `½Δm_i - V'(m_i) + λ(m_j - m_i)` for both components.
pub fn drift(lambda: f64, m1: &Field, m2: &Field) -> (Field, Field) {
    let grid = *m1.grid();
    let one = |a: &Field, b: &Field| {
        let mut lap = vec![0.0; grid.n_nodes()];
        crate::grid::laplacian_into(&grid, a.values(), &mut lap);
        let v = lap
            .iter()
            .zip(a.values().iter().zip(b.values()))
            .map(|(l, (&u, &w))| 0.5 * l - potential_d1(u) + lambda * (w - u))
            .collect();
        Field::from_vec_unchecked(grid, v)
    };
    (one(m1, m2), one(m2, m1))
}

/// Free energy `Σ_i ∫ [¼ (∂_x m_i)² + V(m_i)] + (λ/2) ∫ (m1 - m2)²`,
/// non-increasing along noise-free trajectories.
pub fn free_energy(lambda: f64, m1: &Field, m2: &Field) -> f64 {
    let grid = m1.grid();
    let dx = grid.dx();
    let single = |f: &Field| {
        let v = f.values();
        let gradient: f64 = v.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / dx;
        let pot: Vec<f64> = v.iter().map(|&m| potential(m)).collect();
        let ones = vec![1.0; v.len()];
        0.25 * gradient + dot_weighted(grid, &pot, &ones)
    };
    let diff = m1.sub(m2);
    single(m1) + single(m2) + 0.5 * lambda * dot_weighted(grid, diff.values(), diff.values())
}

/// One-step integrator for a fixed configuration.
#[derive(Debug, Clone)]
pub struct Integrator {
    config: SimConfig,
    grid: Grid1D,
    heat: HeatStep,
    noise_scale: f64,
}

impl Integrator {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.grid()?;
        Ok(Self {
            config: config.clone(),
            grid,
            heat: HeatStep::new(grid, config.dt),
            noise_scale: config.epsilon.sqrt() * config.dt,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn initial_state(&self) -> Result<CoupledState> {
        let g = self.grid;
        let (m1, m2) = match &self.config.initial {
            Initial::Instanton { x0 } => (instanton_field(&g, *x0), instanton_field(&g, *x0)),
            Initial::Constant { value } => (Field::constant(g, *value), Field::constant(g, *value)),
            Initial::Fields { m1, m2 } => (Field::new(g, m1.clone())?, Field::new(g, m2.clone())?),
        };
        CoupledState::new(0.0, m1, m2)
    }

    /// Draws a noise slice for this step, or `None` in the noise-free case.
    pub fn draw_noise(&self, source: &mut NoiseSource) -> Option<NoiseSlice> {
        (self.config.epsilon > 0.0).then(|| sample_noise(&self.grid, self.config.dt, source))
    }

    /// Advances `state` by one step with the given noise slice.
    ///
    /// `seed` and `replica` only label a blow-up diagnostic.
    pub fn advance(
        &self,
        state: &mut CoupledState,
        noise: Option<&NoiseSlice>,
        seed: u64,
        replica: u64,
    ) -> Result<()> {
        let dt = self.config.dt;
        let lambda = self.config.lambda;
        match self.config.mode {
            Mode::Coupled => {
                let old1 = state.m1.values().to_vec();
                let w = noise.map(|n| n.components[0].values());
                self.update(state.m1.values_mut(), state.m2.values(), lambda, w, dt);
                let w = noise.map(|n| n.components[1].values());
                self.update(state.m2.values_mut(), &old1, lambda, w, dt);
            }
            Mode::Single => {
                let w = noise.map(|n| n.components[0].values());
                let frozen = state.m2.values().to_vec();
                self.update(state.m1.values_mut(), &frozen, 0.0, w, dt);
            }
        }
        state.t += dt;
        for (component, f) in [&state.m1, &state.m2].into_iter().enumerate() {
            if let Some(node) = f.values().iter().position(|v| !v.is_finite()) {
                return Err(Error::BlowUp {
                    t: state.t,
                    seed,
                    replica,
                    component,
                    node,
                });
            }
        }
        Ok(())
    }

    fn update(&self, m: &mut [f64], other: &[f64], lambda: f64, noise: Option<&[f64]>, dt: f64) {
        for (u, &w) in m.iter_mut().zip(other) {
            *u += dt * (-potential_d1(*u) + lambda * (w - *u));
        }
        if let Some(xi) = noise {
            for (u, &z) in m.iter_mut().zip(xi) {
                *u += self.noise_scale * z;
            }
        }
        self.heat.apply_in_place(m);
    }

    /// One step drawing fresh noise from `source`.
    pub fn step(&self, state: &mut CoupledState, source: &mut NoiseSource) -> Result<()> {
        let noise = self.draw_noise(source);
        self.advance(state, noise.as_ref(), source.seed(), source.replica())
    }
}

/// Runs replica `replica` of `config`, calling `observe` on every recorded
/// frame (the initial state included).
pub fn simulate_with(
    config: &SimConfig,
    replica: u64,
    mut observe: impl FnMut(&CoupledState),
) -> Result<()> {
    let integrator = Integrator::new(config)?;
    let mut source = NoiseSource::new(config.seed, replica);
    let mut state = integrator.initial_state()?;
    observe(&state);
    let steps = config.n_steps();
    for k in 1..=steps {
        integrator.step(&mut state, &mut source)?;
        if k % config.record_stride == 0 || k == steps {
            observe(&state);
        }
    }
    Ok(())
}

/// Recorded trajectory of replica `replica`.
pub fn simulate_replica(config: &SimConfig, replica: u64) -> Result<Trajectory> {
    let mut frames = Vec::new();
    simulate_with(config, replica, |s| frames.push(s.clone()))?;
    Ok(Trajectory { frames })
}

/// Recorded trajectory of the configured run (replica 0).
pub fn simulate(config: &SimConfig) -> Result<Trajectory> {
    simulate_replica(config, 0)
}

/// Two runs from different initial pairs driven by one noise realization.
pub fn simulate_pair_same_noise(
    config: &SimConfig,
    initial_a: (Field, Field),
    initial_b: (Field, Field),
) -> Result<(Trajectory, Trajectory)> {
    simulate_pair_replica(config, 0, initial_a, initial_b)
}

pub fn simulate_pair_replica(
    config: &SimConfig,
    replica: u64,
    initial_a: (Field, Field),
    initial_b: (Field, Field),
) -> Result<(Trajectory, Trajectory)> {
    let integrator = Integrator::new(config)?;
    let grid = *integrator.grid();
    for f in [&initial_a.0, &initial_a.1, &initial_b.0, &initial_b.1] {
        if *f.grid() != grid {
            return Err(Error::GridMismatch);
        }
    }
    let mut source = NoiseSource::new(config.seed, replica);
    let mut a = CoupledState::new(0.0, initial_a.0, initial_a.1)?;
    let mut b = CoupledState::new(0.0, initial_b.0, initial_b.1)?;
    let mut ta = vec![a.clone()];
    let mut tb = vec![b.clone()];
    let steps = config.n_steps();
    for k in 1..=steps {
        let noise = integrator.draw_noise(&mut source);
        integrator.advance(&mut a, noise.as_ref(), config.seed, replica)?;
        integrator.advance(&mut b, noise.as_ref(), config.seed, replica)?;
        if k % config.record_stride == 0 || k == steps {
            ta.push(a.clone());
            tb.push(b.clone());
        }
    }
    Ok((Trajectory { frames: ta }, Trajectory { frames: tb }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::instanton_derivative_field;

    fn small(eps: f64, lambda: f64) -> SimConfig {
        SimConfig {
            half_length: Some(10.0),
            t_end: 2.0,
            ..SimConfig::new(eps, lambda)
        }
    }

    #[test]
    fn defaults() {
        let c = SimConfig::new(0.05, 1.0);
        assert_eq!(c.dt, 0.025);
        assert_eq!(c.record_stride, 4);
        assert_eq!(c.grid().unwrap().n_nodes(), 401);
        assert_eq!(c.n_steps(), 800);
    }

    #[test]
    fn validation_names_the_offending_key() {
        let mut c = SimConfig::new(0.05, 1.0);
        c.dt = 1.0;
        match c.validate() {
            Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, "dt"),
            other => panic!("{other:?}"),
        }
        let mut c = SimConfig::new(0.0, 1.0);
        assert!(c.validate().is_err());
        c.half_length = Some(10.0);
        assert!(c.validate().is_ok());
        let mut c = SimConfig::new(0.05, -1.0);
        assert!(c.validate().is_err());
        c.lambda = 1.0;
        c.initial = Initial::Fields {
            m1: vec![0.0; 3],
            m2: vec![0.0; 3],
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn noise_free_instanton_is_nearly_stationary() {
        // The lattice kink differs from tanh by O(dx²); per step the state moves O(dt dx²).
        let c = small(0.0, 1.0);
        let integ = Integrator::new(&c).unwrap();
        let mut s = integ.initial_state().unwrap();
        let s0 = s.clone();
        let mut src = NoiseSource::new(0, 0);
        integ.step(&mut s, &mut src).unwrap();
        let moved = s.m1.sub(&s0.m1).sup_norm();
        assert!(moved < c.dt * c.dx * c.dx, "{moved}");
        assert_eq!(s.m1, s.m2);
    }

    #[test]
    fn unstable_maximum_flows_to_plus_one() {
        let mut c = small(0.0, 1.0);
        c.initial = Initial::Constant { value: 0.01 };
        c.t_end = 20.0;
        let traj = simulate(&c).unwrap();
        let last = traj.last().unwrap();
        assert!(last.m1.values().iter().all(|v| (v - 1.0).abs() < 1e-6));
    }

    /// Reference integrator for spatially constant states: classical RK4 with a tiny step.
    fn ode_reference(x: f64, y: f64, lambda: f64, t: f64) -> (f64, f64) {
        let f = |x: f64, y: f64| {
            (
                -potential_d1(x) + lambda * (y - x),
                -potential_d1(y) + lambda * (x - y),
            )
        };
        let n = 20_000;
        let h = t / n as f64;
        let (mut x, mut y) = (x, y);
        for _ in 0..n {
            let k1 = f(x, y);
            let k2 = f(x + 0.5 * h * k1.0, y + 0.5 * h * k1.1);
            let k3 = f(x + 0.5 * h * k2.0, y + 0.5 * h * k2.1);
            let k4 = f(x + h * k3.0, y + h * k3.1);
            x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            y += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        (x, y)
    }

    #[test]
    fn constant_states_follow_the_reaction_ode() {
        let mut c = small(0.0, 1.0);
        c.initial = Initial::Fields {
            m1: vec![1.0; 201],
            m2: vec![-1.0; 201],
        };
        let integ = Integrator::new(&c).unwrap();
        let mut s = integ.initial_state().unwrap();
        let mut src = NoiseSource::new(0, 0);
        let (mut x, mut y) = (1.0, -1.0);
        let mut last_gap = 2.0;
        for _ in 0..40 {
            integ.step(&mut s, &mut src).unwrap();
            let (sx, sy) = (s.m1.values()[50], s.m2.values()[50]);
            // exactly one explicit Euler step of the reaction ODE
            let ex = x + c.dt * (-potential_d1(x) + (y - x));
            let ey = y + c.dt * (-potential_d1(y) + (x - y));
            assert!((sx - ex).abs() < 1e-12 && (sy - ey).abs() < 1e-12);
            // local error against the converged flow is |x''| dt² / 2, and |x''| <= 8 here
            let (rx, ry) = ode_reference(x, y, 1.0, c.dt);
            assert!((sx - rx).abs() < 4.0 * c.dt * c.dt * 1.01, "{} {}", sx, rx);
            assert!((sy - ry).abs() < 4.0 * c.dt * c.dt * 1.01);
            // spatial constancy is preserved exactly by the Neumann solve
            assert!(s.m1.values().iter().all(|v| (v - sx).abs() < 1e-12));
            let gap = s.m1.sub(&s.m2).sup_norm();
            assert!(gap < last_gap);
            last_gap = gap;
            x = sx;
            y = sy;
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let c = small(0.05, 1.0).with_seed(11);
        assert_eq!(simulate(&c).unwrap(), simulate(&c).unwrap());
        let other = simulate(&c.clone().with_seed(12)).unwrap();
        assert_ne!(simulate(&c).unwrap(), other);
    }

    #[test]
    fn records_initial_state_and_every_stride() {
        let c = small(0.05, 1.0);
        let traj = simulate(&c).unwrap();
        assert_eq!(traj.len(), c.n_steps() / c.record_stride + 1);
        assert_eq!(traj.frames[0].t, 0.0);
        assert!((traj.frames[1].t - 0.1).abs() < 1e-12);
    }

    #[test]
    fn component_exchange_symmetry_is_bit_exact() {
        let c = small(0.05, 1.0).with_seed(5);
        let g = c.grid().unwrap();
        let a = instanton_field(&g, 0.3);
        let b = instanton_field(&g, -0.2).lincomb(
            1.0,
            &instanton_derivative_field(&g, 1.0, false),
            0.1,
        );
        let integ = Integrator::new(&c).unwrap();
        let mut s = CoupledState::new(0.0, a.clone(), b.clone()).unwrap();
        let mut t = CoupledState::new(0.0, b, a).unwrap();
        let mut src = NoiseSource::new(5, 0);
        let mut swapped = NoiseSource::new(5, 0).swapped();
        for _ in 0..80 {
            integ.step(&mut s, &mut src).unwrap();
            integ.step(&mut t, &mut swapped).unwrap();
        }
        assert_eq!(s.swapped(), t);
    }

    #[test]
    fn drift_commutes_with_the_reflection_map() {
        let c = small(0.05, 1.3);
        let g = c.grid().unwrap();
        let m1 = Field::from_fn(g, |x| (x - 0.4).tanh() + 0.1 * (2.0 * x).sin());
        let m2 = Field::from_fn(g, |x| (x + 0.7).tanh() + 0.05 * (x * x / 9.0).cos());
        let (d1, d2) = drift(c.lambda, &m1, &m2);
        let (e1, e2) = drift(c.lambda, &m1.reflect_odd(), &m2.reflect_odd());
        assert_eq!(e1, d1.reflect_odd());
        assert_eq!(e2, d2.reflect_odd());
    }

    #[test]
    fn noise_free_energy_is_non_increasing() {
        let mut c = small(0.0, 0.7);
        c.t_end = 8.0;
        c.record_stride = 1;
        let g = c.grid().unwrap();
        let m1 = Field::from_fn(g, |x| (x - 1.0).tanh() + 0.3 * (-(x * x)).exp());
        let m2 = Field::from_fn(g, |x| (1.5 * (x + 2.0)).tanh() - 0.2 * (x / 2.0).sin());
        c.initial = Initial::Fields {
            m1: m1.into_values(),
            m2: m2.into_values(),
        };
        let traj = simulate(&c).unwrap();
        let energies: Vec<f64> = traj
            .frames
            .iter()
            .map(|s| free_energy(c.lambda, &s.m1, &s.m2))
            .collect();
        for w in energies.windows(2) {
            assert!(w[1] <= w[0] + 1e-8, "{} -> {}", w[0], w[1]);
        }
        assert!(energies.last().unwrap() < &energies[0]);
    }

    #[test]
    fn single_mode_freezes_the_second_component() {
        let mut c = small(0.05, 1.0);
        c.mode = Mode::Single;
        let traj = simulate(&c).unwrap();
        let first = &traj.frames[0];
        let last = traj.last().unwrap();
        assert_eq!(first.m2, last.m2);
        assert_ne!(first.m1, last.m1);
    }

    #[test]
    fn same_noise_pairs_with_identical_initials_coincide() {
        let c = small(0.05, 1.0).with_seed(3);
        let g = c.grid().unwrap();
        let m = instanton_field(&g, 0.0);
        let (a, b) = simulate_pair_same_noise(&c, (m.clone(), m.clone()), (m.clone(), m)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn blow_up_is_reported_with_time_and_seed() {
        let mut c = small(0.05, 1.0).with_seed(77);
        c.dt = 0.1;
        c.initial = Initial::Constant { value: 40.0 };
        match simulate(&c) {
            Err(Error::BlowUp { seed, t, .. }) => {
                assert_eq!(seed, 77);
                assert!(t > 0.0);
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }
}
