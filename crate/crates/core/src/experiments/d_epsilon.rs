//! Diffusion coefficient of the zero-mode projection of the Neumann
//! stochastic convolution: the squared norm of the zero mode folded back
//! onto the domain by reflection and periodization.

use crate::error::{invalid, Error, Result};
use crate::grid::{dot_weighted, Grid1D};
use crate::linear::BOUNDARY_COLLAR;
use crate::model::{instanton_slope, ZERO_MODE_SCALE};

fn zero_mode(z: f64) -> f64 {
    ZERO_MODE_SCALE * instanton_slope(z)
}

/// Sum over images `Σ_k [m̃′(y + 4kL) + m̃′(4kL + 2L - y)]` at the grid nodes,
/// with shells added until they fall below `1e-18` relative.
pub fn folded_zero_mode(grid: &Grid1D, half_length: f64, x0: f64) -> Vec<f64> {
    let l = half_length;
    let shell = |k: i64, y: f64| {
        let s = 4.0 * k as f64 * l;
        zero_mode(y + s - x0) + zero_mode(s + 2.0 * l - y - x0)
    };
    let mut f: Vec<f64> = (0..grid.n_nodes()).map(|j| shell(0, grid.x(j))).collect();
    for k in 1.. {
        let mut largest = 0.0f64;
        for (j, v) in f.iter_mut().enumerate() {
            let y = grid.x(j);
            let add = shell(k, y) + shell(-k, y);
            largest = largest.max(add.abs());
            *v += add;
        }
        if largest < 1e-18 {
            break;
        }
    }
    f
}

/// `D_ε = ∫_{-1/ε}^{1/ε} [folded m̃′_{x0}]² dy` by trapezoid quadrature on
/// `grid`, which must span `[-1/ε, 1/ε]`.
pub fn compute_d_epsilon(epsilon: f64, grid: &Grid1D, x0: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon", "must be positive"));
    }
    let l = 1.0 / epsilon;
    if (grid.half_length() - l).abs() > 1e-9 * l {
        return Err(invalid(
            "grid",
            format!(
                "half_length {} does not equal 1/epsilon = {l}",
                grid.half_length()
            ),
        ));
    }
    let window = l - BOUNDARY_COLLAR;
    if !(x0.abs() <= window) {
        return Err(Error::OutOfWindow { xi: x0, window });
    }
    let f = folded_zero_mode(grid, l, x0);
    Ok(dot_weighted(grid, &f, &f))
}
