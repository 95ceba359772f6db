//! Uniform grid on `[-L, L]` with Neumann boundaries, fields sampled on it,
//! and the discrete operators the rest of the crate is built from.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::tridiag::TridiagonalFactor;

/// Uniform symmetric grid on `[-half_length, half_length]`.
///
/// `epsilon` is the noise strength of the model; the physical domain
/// half-length is `1/epsilon` unless it was overridden at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    epsilon: f64,
    half_length: f64,
    dx: f64,
    n_nodes: usize,
}

/// Builds a grid with spacing `dx` on `[-L, L]`, `L = half_length_override.unwrap_or(1/epsilon)`.
pub fn build_grid(epsilon: f64, dx: f64, half_length_override: Option<f64>) -> Result<Grid1D> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if !(dx > 0.0) || !dx.is_finite() {
        return Err(Error::InvalidGrid(format!("dx must be positive, got {dx}")));
    }
    let half_length = half_length_override.unwrap_or(1.0 / epsilon);
    if !(half_length > 0.0) || !half_length.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "half_length must be positive, got {half_length}"
        )));
    }
    if dx > half_length {
        return Err(Error::InvalidGrid(format!(
            "dx = {dx} exceeds half_length = {half_length}"
        )));
    }
    let cells = 2.0 * half_length / dx;
    let n_cells = cells.round();
    if (cells - n_cells).abs() > 1e-9 * cells.max(1.0) {
        return Err(Error::InvalidGrid(format!(
            "dx = {dx} does not divide 2*half_length = {}",
            2.0 * half_length
        )));
    }
    let n_nodes = n_cells as usize + 1;
    if n_nodes < 3 {
        return Err(Error::InvalidGrid(format!(
            "need at least 3 nodes, got {n_nodes}"
        )));
    }
    Ok(Grid1D {
        epsilon,
        half_length,
        dx: 2.0 * half_length / n_cells,
        n_nodes,
    })
}

impl Grid1D {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Node position `x_j`. Computed about the midpoint so that
    /// `x(j) == -x(n-1-j)` holds exactly in floating point.
    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        (j as f64 - 0.5 * (self.n_nodes - 1) as f64) * self.dx
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|j| self.x(j)).collect()
    }

    /// Trapezoid quadrature weight of node `j`.
    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        if j == 0 || j + 1 == self.n_nodes {
            0.5 * self.dx
        } else {
            self.dx
        }
    }

    /// Index of the node closest to `x`, clamped to the grid.
    pub fn nearest_node(&self, x: f64) -> usize {
        let s = (x + 0.5 * (self.n_nodes - 1) as f64 * self.dx) / self.dx;
        s.round().clamp(0.0, (self.n_nodes - 1) as f64) as usize
    }
}

/// A real function sampled at the nodes of a [`Grid1D`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    grid: Grid1D,
    values: Vec<f64>,
}

impl Field {
    /// Wraps node values, checking length and finiteness.
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes {
            return Err(invalid(
                "values",
                format!("expected {} nodes, got {}", grid.n_nodes, values.len()),
            ));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid("values", format!("non-finite value at node {j}")));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: Grid1D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_nodes);
        Self { grid, values }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n_nodes).map(|j| f(grid.x(j))).collect();
        Self { grid, values }
    }

    pub fn constant(grid: Grid1D, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.n_nodes],
        }
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sup norm of `self - other` over nodes with `|x - center| <= radius`.
    pub fn local_sup_distance(&self, other: &Field, center: f64, radius: f64) -> f64 {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        (0..self.len())
            .filter(|&j| (self.grid.x(j) - center).abs() <= radius)
            .fold(0.0, |m, j| m.max((self.values[j] - other.values[j]).abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_vec_unchecked(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// `a * self + b * other`. Panics when the grids differ.
    pub fn lincomb(&self, a: f64, other: &Field, b: f64) -> Field {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        Field::from_vec_unchecked(self.grid, values)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.lincomb(1.0, other, -1.0)
    }

    pub fn add(&self, other: &Field) -> Field {
        self.lincomb(1.0, other, 1.0)
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    /// The reflection `(G f)(x) = -f(-x)` about the grid midpoint.
    pub fn reflect_odd(&self) -> Field {
        Field::from_vec_unchecked(self.grid, self.values.iter().rev().map(|v| -v).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Value at `x` of the extension of `field` to the real line obtained by
/// reflecting through `+L` and repeating with period `4L`. Off-node values
/// are linearly interpolated.
pub fn reflect_extend(field: &Field, x: f64) -> f64 {
    let grid = field.grid();
    let l = grid.half_length();
    let period = 4.0 * l;
    let s = (x + l).rem_euclid(period);
    let y = if s <= 2.0 * l { s - l } else { 3.0 * l - s };
    interpolate(field, y)
}

fn interpolate(field: &Field, y: f64) -> f64 {
    let grid = field.grid();
    let n = grid.n_nodes();
    let s = ((y - grid.x(0)) / grid.dx()).clamp(0.0, (n - 1) as f64);
    let j = (s.floor() as usize).min(n - 2);
    let frac = s - j as f64;
    let v = field.values();
    (1.0 - frac) * v[j] + frac * v[j + 1]
}

/// Second difference with even-reflection ghosts `f[-1] = f[1]`, `f[n] = f[n-2]`.
pub fn laplacian_neumann(field: &Field) -> Field {
    let mut out = vec![0.0; field.len()];
    laplacian_into(field.grid(), field.values(), &mut out);
    Field::from_vec_unchecked(*field.grid(), out)
}

/// The neighbour sum is formed first so that the stencil commutes bit-exactly
/// with reversal of the node order.
pub(crate) fn laplacian_into(grid: &Grid1D, f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let inv = 1.0 / (grid.dx() * grid.dx());
    out[0] = ((f[1] + f[1]) - 2.0 * f[0]) * inv;
    for j in 1..n - 1 {
        out[j] = ((f[j - 1] + f[j + 1]) - 2.0 * f[j]) * inv;
    }
    out[n - 1] = ((f[n - 2] + f[n - 2]) - 2.0 * f[n - 1]) * inv;
}

/// Trapezoid approximation of `∫ f g dx` over the grid.
pub fn inner_product(f: &Field, g: &Field) -> Result<f64> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(dot_weighted(f.grid(), f.values(), g.values()))
}

pub(crate) fn dot_weighted(grid: &Grid1D, f: &[f64], g: &[f64]) -> f64 {
    let n = f.len();
    let interior: f64 = (1..n - 1).map(|j| f[j] * g[j]).sum();
    grid.dx() * (interior + 0.5 * (f[0] * g[0] + f[n - 1] * g[n - 1]))
}

/// Backward-Euler step of `∂_t u = ½ ∂_xx u` with Neumann boundaries, i.e. the
/// solve `(I - (h/2) Δ_N) u_new = u_old` with a cached factorization.
#[derive(Debug, Clone)]
pub struct HeatStep {
    grid: Grid1D,
    h: f64,
    factor: TridiagonalFactor,
}

impl HeatStep {
    pub fn new(grid: Grid1D, h: f64) -> Self {
        let n = grid.n_nodes();
        let c = 0.5 * h / (grid.dx() * grid.dx());
        let diag = vec![1.0 + 2.0 * c; n];
        let mut sub = vec![-c; n];
        let mut sup = vec![-c; n];
        sup[0] = -2.0 * c;
        sub[n - 1] = -2.0 * c;
        sub[0] = 0.0;
        sup[n - 1] = 0.0;
        Self {
            grid,
            h,
            factor: TridiagonalFactor::new(&sub, &diag, &sup),
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn apply_in_place(&self, values: &mut [f64]) {
        self.factor.solve_in_place(values);
    }
}

/// Neumann heat semigroup `H_t` for `∂_t u = ½ ∂_xx u`, realized with
/// backward-Euler sub-steps no longer than `dx/4`. `t = 0` returns the input.
pub fn apply_heat_semigroup(field: &Field, t: f64) -> Result<Field> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid("t", format!("must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(field.clone());
    }
    let max_sub = field.grid().dx() / 4.0;
    let steps = ((t / max_sub) - 1e-9).ceil().max(1.0) as usize;
    let stepper = HeatStep::new(*field.grid(), t / steps as f64);
    let mut values = field.values().to_vec();
    for _ in 0..steps {
        stepper.apply_in_place(&mut values);
    }
    Ok(Field::from_vec_unchecked(*field.grid(), values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(eps: f64, dx: f64) -> Grid1D {
        build_grid(eps, dx, None).unwrap()
    }

    #[test]
    fn build_grid_examples() {
        let g = grid(0.1, 0.1);
        assert_eq!(g.n_nodes(), 201);
        assert!((g.half_length() - 10.0).abs() < 1e-12);
        let g = grid(0.05, 0.1);
        assert_eq!(g.n_nodes(), 401);
        assert!((g.half_length() - 20.0).abs() < 1e-12);
        assert!(build_grid(0.1, 30.0, None).is_err());
    }

    #[test]
    fn build_grid_rejects_bad_inputs() {
        assert!(build_grid(0.0, 0.1, None).is_err());
        assert!(build_grid(-1.0, 0.1, None).is_err());
        assert!(build_grid(0.1, -0.1, None).is_err());
        assert!(build_grid(0.1, 0.3, None).is_err());
        assert!(build_grid(0.1, 0.1, Some(-2.0)).is_err());
        assert!(build_grid(1.0, 1.0, None).is_ok());
        assert!(build_grid(1.0, 1.0, Some(0.5)).is_err());
    }

    #[test]
    fn grid_invariants() {
        for &(eps, dx, hl) in &[(0.1, 0.1, None), (0.05, 0.05, None), (0.3, 0.1, Some(5.0))] {
            let g = build_grid(eps, dx, hl).unwrap();
            let n = g.n_nodes();
            let span = (n - 1) as f64 * g.dx();
            assert!((span - 2.0 * g.half_length()).abs() <= f64::EPSILON * 4.0 * span);
            for j in 0..n {
                assert_eq!(g.x(j) + g.x(n - 1 - j), 0.0);
            }
        }
        let g = build_grid(0.1, 0.1, Some(5.05)).unwrap();
        assert_eq!(g.n_nodes(), 102);
        assert_eq!(g.x(0), -g.x(101));
    }

    #[test]
    fn reflect_extend_examples() {
        let g = grid(0.1, 0.1);
        let id = Field::from_fn(g, |x| x);
        assert!((reflect_extend(&id, 12.0) - 8.0).abs() < 1e-12);
        assert!((reflect_extend(&id, -12.0) + 8.0).abs() < 1e-12);
        assert!((reflect_extend(&id, 3.25) - 3.25).abs() < 1e-12);
        let f = Field::from_fn(g, |x| (0.3 * x).sin() + x * x / 50.0);
        for &x0 in &[-9.73, -1.0, 0.0, 4.44, 9.9] {
            let a = reflect_extend(&f, x0);
            let b = reflect_extend(&f, x0 + 40.0);
            let c = reflect_extend(&f, x0 - 80.0);
            assert!((a - b).abs() < 1e-12 && (a - c).abs() < 1e-12);
        }
        let c = Field::constant(g, 0.7);
        for &x in &[-100.3, -13.0, 0.0, 17.0, 55.5] {
            assert!((reflect_extend(&c, x) - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn reflect_extend_matches_nodes() {
        let g = grid(0.1, 0.1);
        let f = Field::from_fn(g, |x| (x / 3.0).cos() * x);
        for j in 0..g.n_nodes() {
            assert!((reflect_extend(&f, g.x(j)) - f.values()[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_constant_and_quadratic() {
        let g = grid(0.1, 0.1);
        let lap = laplacian_neumann(&Field::constant(g, 3.3));
        assert!(lap.values().iter().all(|&v| v == 0.0));
        let lap = laplacian_neumann(&Field::from_fn(g, |x| x * x));
        for j in 1..g.n_nodes() - 1 {
            assert!((lap.values()[j] - 2.0).abs() < 1e-8);
        }
    }

    fn cosine_error(dx: f64) -> f64 {
        let g = grid(0.1, dx);
        let l = g.half_length();
        let k = PI / (2.0 * l);
        let f = Field::from_fn(g, |x| (k * (x + l)).cos());
        let lap = laplacian_neumann(&f);
        lap.values()
            .iter()
            .zip(f.values())
            .fold(0.0, |m, (a, b)| m.max((a + k * k * b).abs()))
    }

    #[test]
    fn laplacian_converges_quadratically_on_neumann_mode() {
        let e1 = cosine_error(0.2);
        let e2 = cosine_error(0.1);
        let e3 = cosine_error(0.05);
        assert!(e1 < 1e-5);
        let r1 = e1 / e2;
        let r2 = e2 / e3;
        assert!(
            (r1 - 4.0).abs() < 0.2 && (r2 - 4.0).abs() < 0.2,
            "{r1} {r2}"
        );
    }

    #[test]
    fn heat_semigroup_examples() {
        let g = grid(0.1, 0.1);
        let c = apply_heat_semigroup(&Field::constant(g, -0.4), 3.0).unwrap();
        assert!(c.values().iter().all(|v| (v + 0.4).abs() < 1e-13));

        let l = g.half_length();
        let k = PI / (2.0 * l);
        let f = Field::from_fn(g, |x| (k * (x + l)).cos());
        let t = 2.0;
        let out = apply_heat_semigroup(&f, t).unwrap();
        let decay = (-0.5 * k * k * t).exp();
        let err = out
            .values()
            .iter()
            .zip(f.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - decay * b).abs()));
        // backward Euler error is O(k^4 t dt), plus O(dx^2 k^4 t)
        assert!(err < 1e-5, "{err}");

        let g = grid(0.1, 0.1);
        let bump = Field::from_fn(g, |x| (-(x - 2.0) * (x - 2.0)).exp() + 0.1 * x);
        let out = apply_heat_semigroup(&bump, 4.0).unwrap();
        let m0 = inner_product(&bump, &Field::constant(g, 1.0)).unwrap();
        let m1 = inner_product(&out, &Field::constant(g, 1.0)).unwrap();
        assert!(((m1 - m0) / m0).abs() < 1e-10);

        assert_eq!(apply_heat_semigroup(&bump, 0.0).unwrap(), bump);
        assert!(apply_heat_semigroup(&bump, -1.0).is_err());
    }

    #[test]
    fn heat_eigenmode_error_shrinks_with_resolution() {
        let err = |dx: f64| {
            let g = build_grid(0.5, dx, None).unwrap();
            let l = g.half_length();
            let k = PI / (2.0 * l);
            let f = Field::from_fn(g, |x| (k * (x + l)).cos());
            let out = apply_heat_semigroup(&f, 1.0).unwrap();
            let decay = (-0.5 * k * k).exp();
            out.values()
                .iter()
                .zip(f.values())
                .fold(0.0f64, |m, (a, b)| m.max((a - decay * b).abs()))
        };
        let (e1, e2) = (err(0.1), err(0.05));
        assert!(e2 < e1 && e1 < 1e-3, "{e1} {e2}");
    }

    #[test]
    fn semigroup_property() {
        let g = grid(0.1, 0.1);
        let f = Field::from_fn(g, |x| (x / 2.0).sin() + (-(x * x)).exp());
        let a = apply_heat_semigroup(&apply_heat_semigroup(&f, 1.0).unwrap(), 2.0).unwrap();
        let b = apply_heat_semigroup(&f, 3.0).unwrap();
        assert!(a.sub(&b).sup_norm() < 1e-8 * 120.0);
    }

    #[test]
    fn implicit_step_matrix_is_nonnegative_with_unit_row_sums() {
        let g = build_grid(0.1, 0.1, Some(3.0)).unwrap();
        let n = g.n_nodes();
        let step = HeatStep::new(g, 0.025);
        let mut m = vec![vec![0.0; n]; n];
        for col in 0..n {
            let mut e = vec![0.0; n];
            e[col] = 1.0;
            step.apply_in_place(&mut e);
            for row in 0..n {
                m[row][col] = e[row];
            }
        }
        for row in &m {
            assert!(row.iter().all(|&v| v >= 0.0));
            let s: f64 = row.iter().sum();
            assert!(s <= 1.0 + 1e-13);
        }
    }

    #[test]
    fn inner_product_examples() {
        let g = grid(0.1, 0.1);
        let one = Field::constant(g, 1.0);
        assert!((inner_product(&one, &one).unwrap() - 20.0).abs() < 1e-12);
        let odd = Field::from_fn(g, |x| x.powi(3) - x);
        let even = Field::from_fn(g, |x| (x * x).cos());
        assert!(inner_product(&odd, &even).unwrap().abs() < 1e-12);
        let other = Field::constant(grid(0.05, 0.1), 1.0);
        assert_eq!(inner_product(&one, &other), Err(Error::GridMismatch));
    }

    #[test]
    fn field_validation() {
        let g = grid(0.1, 0.1);
        assert!(Field::new(g, vec![0.0; 3]).is_err());
        let mut v = vec![0.0; g.n_nodes()];
        v[7] = f64::NAN;
        assert!(Field::new(g, v).is_err());
    }

    proptest! {
        #[test]
        fn reflection_is_continuous_at_the_boundary(
            coeffs in proptest::collection::vec(-2.0f64..2.0, 4),
            delta in 1e-7f64..1e-3,
        ) {
            let g = grid(0.1, 0.1);
            let f = Field::from_fn(g, |x| coeffs[0] + coeffs[1] * (x / 3.0).sin()
                + coeffs[2] * (x / 7.0).cos() + coeffs[3] * x / 10.0);
            let l = g.half_length();
            let gap = (reflect_extend(&f, l - delta) - reflect_extend(&f, l + delta)).abs();
            prop_assert!(gap < 100.0 * delta);
        }

        #[test]
        fn heat_flow_is_a_sup_norm_contraction(
            values in proptest::collection::vec(-3.0f64..3.0, 41),
            t in 0.0f64..5.0,
        ) {
            let g = build_grid(0.5, 0.1, Some(2.0)).unwrap();
            let f = Field::new(g, values).unwrap();
            let out = apply_heat_semigroup(&f, t).unwrap();
            prop_assert!(out.sup_norm() <= f.sup_norm() * (1.0 + 1e-14));
        }
    }
}
