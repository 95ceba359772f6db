//! The symmetric double well `V(m) = m⁴/4 - m²/2`, its instanton `tanh(x - x0)`
//! and the normalized translation mode.

use crate::grid::{laplacian_neumann, Field, Grid1D};

/// Scale turning `sech²` into the unit-norm zero mode: `(√3/2)² · 4/3 = 1`.
pub const ZERO_MODE_SCALE: f64 = 0.866_025_403_784_438_6;

/// `∫ sech⁴ = 4/3`, the squared L² norm of the unnormalized zero mode.
pub const ZERO_MODE_NORM_SQ: f64 = 4.0 / 3.0;

/// Diffusion coefficient of a single-component front in rescaled time.
pub const SINGLE_FRONT_DIFFUSION: f64 = 0.75;

/// Diffusion coefficient of the coupled two-component front in rescaled time.
pub const COUPLED_FRONT_DIFFUSION: f64 = 0.375;

#[inline]
pub fn potential(m: f64) -> f64 {
    let m2 = m * m;
    0.25 * m2 * m2 - 0.5 * m2
}

#[inline]
pub fn potential_d1(m: f64) -> f64 {
    m * m * m - m
}

#[inline]
pub fn potential_d2(m: f64) -> f64 {
    3.0 * m * m - 1.0
}

/// `(V(m), V'(m), V''(m))`.
pub fn potential_derivatives(m: f64) -> (f64, f64, f64) {
    (potential(m), potential_d1(m), potential_d2(m))
}

#[inline]
pub fn instanton(z: f64) -> f64 {
    z.tanh()
}

/// `sech²(z)`, evaluated without cancellation in the tails.
#[inline]
pub fn instanton_slope(z: f64) -> f64 {
    let c = z.cosh();
    1.0 / (c * c)
}

/// `tanh(x - x0)` at every node.
pub fn instanton_field(grid: &Grid1D, x0: f64) -> Field {
    Field::from_fn(*grid, |x| instanton(x - x0))
}

/// `sech²(x - x0)` at every node, times `√3/2` when `normalized`.
pub fn instanton_derivative_field(grid: &Grid1D, x0: f64, normalized: bool) -> Field {
    let scale = if normalized { ZERO_MODE_SCALE } else { 1.0 };
    Field::from_fn(*grid, |x| scale * instanton_slope(x - x0))
}

/// Largest `|½ Δ m - V'(m)|` over nodes at least two units from the boundary.
pub fn stationarity_residual_of(field: &Field) -> f64 {
    let grid = field.grid();
    let lap = laplacian_neumann(field);
    let limit = grid.half_length() - 2.0;
    (0..grid.n_nodes())
        .filter(|&j| grid.x(j).abs() <= limit)
        .fold(0.0, |acc, j| {
            let m = field.values()[j];
            acc.max((0.5 * lap.values()[j] - potential_d1(m)).abs())
        })
}

/// Discrete stationarity defect of the centered instanton.
pub fn stationarity_residual(grid: &Grid1D) -> f64 {
    stationarity_residual_of(&instanton_field(grid, 0.0))
}
