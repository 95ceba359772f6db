//! The operator `L_{x0} = ½∂_xx - V''(m̄_{x0})` linearized about an instanton,
//! its spectrum, its semigroup, and the linearized pair dynamics
//!
//! ```text
//! ∂_t u = L u + λ (v - u),    ∂_t v = L v + λ (u - v)
//! ```
//!
//! which decouple into `U⁺ = u + v` evolving under `L` and `U⁻ = u - v`
//! evolving under `L - 2λ`.

use serde::{Deserialize, Serialize};

use crate::eigen::SymTridiagonal;
use crate::error::{invalid, Error, Result};
use crate::grid::{dot_weighted, laplacian_into, Field, Grid1D, HeatStep};
use crate::model::{instanton, instanton_derivative_field, potential_d2};

/// Distance that centers must keep from the boundary.
pub const BOUNDARY_COLLAR: f64 = 2.0;

/// Residual tolerance for eigenpairs, relative to the operator norm.
const EIGEN_TOL: f64 = 1e-10;

fn check_window(grid: &Grid1D, x0: f64) -> Result<()> {
    let window = grid.half_length() - BOUNDARY_COLLAR;
    if !(x0.abs() <= window) {
        return Err(Error::OutOfWindow { xi: x0, window });
    }
    Ok(())
}

fn potential_profile(grid: &Grid1D, x0: f64) -> Vec<f64> {
    (0..grid.n_nodes())
        .map(|j| potential_d2(instanton(grid.x(j) - x0)))
        .collect()
}

/// Discrete `L_{x0} - shift·I` with the Neumann stencil.
///
/// The nodal matrix `A` is self-adjoint for the trapezoid inner product; it is
/// stored as its symmetric similarity transform `W^{1/2} A W^{-1/2}` (`W` the
/// quadrature weights), which only changes the two boundary off-diagonals.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    grid: Grid1D,
    x0: f64,
    shift: f64,
    potential: Vec<f64>,
    matrix: SymTridiagonal,
}

pub fn assemble_operator(grid: &Grid1D, x0: f64, shift: f64) -> Result<LinearOperator> {
    check_window(grid, x0)?;
    if !(shift >= 0.0) || !shift.is_finite() {
        return Err(invalid(
            "shift",
            format!("must be nonnegative, got {shift}"),
        ));
    }
    let n = grid.n_nodes();
    let h2 = grid.dx() * grid.dx();
    let potential = potential_profile(grid, x0);
    let diag = potential.iter().map(|p| -1.0 / h2 - p - shift).collect();
    let mut off = vec![0.5 / h2; n - 1];
    off[0] = std::f64::consts::FRAC_1_SQRT_2 / h2;
    off[n - 2] = std::f64::consts::FRAC_1_SQRT_2 / h2;
    Ok(LinearOperator {
        grid: *grid,
        x0,
        shift,
        potential,
        matrix: SymTridiagonal::new(diag, off),
    })
}

impl LinearOperator {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Symmetrized matrix.
    pub fn matrix(&self) -> &SymTridiagonal {
        &self.matrix
    }

    /// `½ Δ_N u - (V''(m̄_{x0}) + shift) u` at every node.
    pub fn apply(&self, u: &Field) -> Result<Field> {
        if *u.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = vec![0.0; self.grid.n_nodes()];
        laplacian_into(&self.grid, u.values(), &mut out);
        for ((o, &p), &v) in out.iter_mut().zip(&self.potential).zip(u.values()) {
            *o = 0.5 * *o - (p + self.shift) * v;
        }
        Ok(Field::from_vec_unchecked(self.grid, out))
    }

    pub fn eigen_spectrum(&self, k: usize) -> Result<SpectrumResult> {
        eigen_spectrum(self, k)
    }
}

/// Top of the spectrum of a [`LinearOperator`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Unit norm for the trapezoid inner product, sign fixed so that the
    /// entry of largest magnitude is positive.
    pub eigenvectors: Vec<Field>,
    /// `eigenvalues[0] - eigenvalues[1]`; NaN when only one pair was requested.
    pub gap: f64,
}

/// Top `k` eigenpairs of `op`, each validated by its residual.
pub fn eigen_spectrum(op: &LinearOperator, k: usize) -> Result<SpectrumResult> {
    let n = op.grid.n_nodes();
    if k == 0 || k > n {
        return Err(invalid("k", format!("must be in 1..={n}, got {k}")));
    }
    let pairs = op.matrix.top_eigenpairs(k, EIGEN_TOL)?;
    let inv_sqrt_w: Vec<f64> = (0..n).map(|j| 1.0 / op.grid.weight(j).sqrt()).collect();
    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenvectors = Vec::with_capacity(k);
    for (mu, s) in pairs {
        let mut v: Vec<f64> = s.iter().zip(&inv_sqrt_w).map(|(a, b)| a * b).collect();
        let peak = v
            .iter()
            .cloned()
            .fold(0.0f64, |m, a| if a.abs() > m.abs() { a } else { m });
        if peak < 0.0 {
            v.iter_mut().for_each(|a| *a = -*a);
        }
        eigenvalues.push(mu);
        eigenvectors.push(Field::from_vec_unchecked(op.grid, v));
    }
    let gap = if k >= 2 {
        eigenvalues[0] - eigenvalues[1]
    } else {
        f64::NAN
    };
    Ok(SpectrumResult {
        eigenvalues,
        eigenvectors,
        gap,
    })
}

/// Time stepper for the linearized dynamics: the splitting scheme of the
/// nonlinear integrator with `V'(m)` replaced by `V''(m̄_{x0}) u`.
#[derive(Debug, Clone)]
pub struct LinearPropagator {
    grid: Grid1D,
    x0: f64,
    dt: f64,
    potential: Vec<f64>,
    heat: HeatStep,
}

impl LinearPropagator {
    pub fn new(grid: &Grid1D, x0: f64, dt: f64) -> Result<Self> {
        check_window(grid, x0)?;
        if !(dt > 0.0) || dt > grid.dx() {
            return Err(invalid("dt", format!("must be in (0, dx], got {dt}")));
        }
        Ok(Self {
            grid: *grid,
            x0,
            dt,
            potential: potential_profile(grid, x0),
            heat: HeatStep::new(*grid, dt),
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One step of `∂_t u = (L - shift) u + forcing_scale · forcing`.
    pub fn step(&self, u: &mut [f64], shift: f64, forcing: Option<(&[f64], f64)>) {
        let dt = self.dt;
        for (a, &p) in u.iter_mut().zip(&self.potential) {
            *a -= dt * (p + shift) * *a;
        }
        if let Some((f, scale)) = forcing {
            for (a, &z) in u.iter_mut().zip(f) {
                *a += scale * z;
            }
        }
        self.heat.apply_in_place(u);
    }

    /// One step of the coupled pair; both reaction updates read the old values.
    pub fn step_pair(&self, u: &mut [f64], v: &mut [f64], lambda: f64) {
        let dt = self.dt;
        for ((a, b), &p) in u.iter_mut().zip(v.iter_mut()).zip(&self.potential) {
            let (ua, vb) = (*a, *b);
            *a = ua + dt * (-p * ua + lambda * (vb - ua));
            *b = vb + dt * (-p * vb + lambda * (ua - vb));
        }
        self.heat.apply_in_place(u);
        self.heat.apply_in_place(v);
    }

    pub fn n_steps(&self, t: f64) -> usize {
        (t / self.dt).round() as usize
    }

    /// `g_t φ` for the operator `L - shift`.
    pub fn evolve(&self, phi: &Field, shift: f64, t: f64) -> Result<Field> {
        if *phi.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        let mut u = phi.values().to_vec();
        for _ in 0..self.n_steps(t) {
            self.step(&mut u, shift, None);
        }
        Ok(Field::from_vec_unchecked(self.grid, u))
    }

    /// Full matrix of `g_t` (row `j` holds the kernel at `x_j`), built
    /// column by column from evolved indicator vectors.
    pub fn kernel_matrix(&self, t: f64) -> Vec<Vec<f64>> {
        let n = self.grid.n_nodes();
        let steps = self.n_steps(t);
        let mut rows = vec![vec![0.0; n]; n];
        let mut col = vec![0.0; n];
        for k in 0..n {
            col.iter_mut().for_each(|a| *a = 0.0);
            col[k] = 1.0;
            for _ in 0..steps {
                self.step(&mut col, 0.0, None);
            }
            for (row, &c) in rows.iter_mut().zip(&col) {
                row[k] = c;
            }
        }
        rows
    }
}

/// Row sums of [`LinearPropagator::kernel_matrix`], i.e. `∫ g_t(x_j, y) dy`.
pub fn kernel_row_sums(matrix: &[Vec<f64>]) -> Vec<f64> {
    matrix.iter().map(|r| r.iter().sum()).collect()
}

/// Projections recorded by [`evolve_linear_pair`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearRecord {
    pub t: f64,
    /// `⟨U⁺, m̃′⟩`
    pub proj_plus: f64,
    /// `⟨U⁻, m̃′⟩`
    pub proj_minus: f64,
    /// `‖U⁺ - ⟨U⁺, m̃′⟩ m̃′‖_∞`
    pub orth_norm: f64,
    /// `‖U⁻‖_∞`
    pub minus_sup: f64,
    /// `‖u‖_∞ + ‖v‖_∞`
    pub pair_sup: f64,
}

#[derive(Debug, Clone)]
pub struct LinearPairRun {
    pub u: Field,
    pub v: Field,
    /// One record per step, the initial data included.
    pub records: Vec<LinearRecord>,
}

/// Evolves the noise-free linearized pair around `m̄_{x0}` up to `t_end`.
pub fn evolve_linear_pair(
    u0: &Field,
    v0: &Field,
    lambda: f64,
    x0: f64,
    t_end: f64,
    dt: f64,
) -> Result<LinearPairRun> {
    if u0.grid() != v0.grid() {
        return Err(Error::GridMismatch);
    }
    if !(lambda >= 0.0) {
        return Err(invalid("lambda", "must be nonnegative"));
    }
    if !(t_end > 0.0) {
        return Err(invalid("t_end", "must be positive"));
    }
    let grid = *u0.grid();
    let prop = LinearPropagator::new(&grid, x0, dt)?;
    let mode = instanton_derivative_field(&grid, x0, true);
    let mut u = u0.values().to_vec();
    let mut v = v0.values().to_vec();
    let record = |t: f64, u: &[f64], v: &[f64]| {
        let plus: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + b).collect();
        let minus: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        let proj_plus = dot_weighted(&grid, &plus, mode.values());
        let proj_minus = dot_weighted(&grid, &minus, mode.values());
        let orth_norm = plus
            .iter()
            .zip(mode.values())
            .fold(0.0f64, |m, (p, e)| m.max((p - proj_plus * e).abs()));
        let sup = |w: &[f64]| w.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        LinearRecord {
            t,
            proj_plus,
            proj_minus,
            orth_norm,
            minus_sup: sup(&minus),
            pair_sup: sup(u) + sup(v),
        }
    };
    let steps = prop.n_steps(t_end);
    let mut records = Vec::with_capacity(steps + 1);
    records.push(record(0.0, &u, &v));
    for k in 1..=steps {
        prop.step_pair(&mut u, &mut v, lambda);
        if let Some(j) = u.iter().chain(&v).position(|a| !a.is_finite()) {
            return Err(Error::BlowUp {
                t: k as f64 * dt,
                seed: 0,
                replica: 0,
                component: usize::from(j >= u.len()),
                node: j % u.len(),
            });
        }
        records.push(record(k as f64 * dt, &u, &v));
    }
    Ok(LinearPairRun {
        u: Field::from_vec_unchecked(grid, u),
        v: Field::from_vec_unchecked(grid, v),
        records,
    })
}

/// Minus the least-squares slope of `log y` against `t` over samples with
/// `t` in `window`.
pub fn fit_decay_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= lo && *t <= hi)
        .cloned()
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} samples in window [{lo}, {hi}], need 3",
            pts.len()
        )));
    }
    if let Some((t, y)) = pts.iter().find(|(_, y)| !(*y > 0.0)) {
        return Err(invalid(
            "series",
            format!("non-positive value {y} at t = {t}"),
        ));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let lm = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, y) in &pts {
        sxy += (t - tm) * (y.ln() - lm);
        sxx += (t - tm) * (t - tm);
    }
    if sxx == 0.0 {
        return Err(Error::Degenerate("all samples share one time".into()));
    }
    Ok(-sxy / sxx)
}

/// Outcome of [`semigroup_contraction_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionCheck {
    /// `‖g_t φ⊥‖_∞`
    pub lhs: f64,
    /// `e^{-α t} ‖φ⊥‖_∞`
    pub rhs: f64,
    /// Measured gap used for `rhs`.
    pub alpha: f64,
}

/// Compares the decay of the component of `phi` transverse to `m̃′` with the
/// measured spectral gap. `g_t` is realized by the splitting stepper at
/// `dt = dx/4`.
pub fn semigroup_contraction_check(
    op: &LinearOperator,
    phi: &Field,
    t: f64,
) -> Result<ContractionCheck> {
    if !(t >= 1.0) {
        return Err(invalid("t", format!("must be at least 1, got {t}")));
    }
    if *phi.grid() != op.grid {
        return Err(Error::GridMismatch);
    }
    let alpha = eigen_spectrum(op, 2)?.gap;
    let mode = instanton_derivative_field(&op.grid, op.x0, true);
    let c = dot_weighted(&op.grid, phi.values(), mode.values());
    let perp = phi.lincomb(1.0, &mode, -c);
    let prop = LinearPropagator::new(&op.grid, op.x0, op.grid.dx() / 4.0)?;
    let evolved = prop.evolve(&perp, op.shift, t)?;
    Ok(ContractionCheck {
        lhs: evolved.sup_norm(),
        rhs: (-alpha * t).exp() * perp.sup_norm(),
        alpha,
    })
}
