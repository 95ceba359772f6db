//! Numerical laboratory for the interface of a two-component stochastic
//! Allen–Cahn system with linear attraction between the components.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`]: Neumann grid, fields, Laplacian, heat semigroup, quadrature
//! * [`model`]: double-well potential, instanton and zero mode
//! * [`noise`] / [`spde`]: white-noise lattice sampling and the splitting integrator
//! * [`linear`]: linearized operator, its spectrum and the diagonalized pair dynamics
//! * [`center`]: the orthogonality-defined interface center and its tracker
//! * [`experiments`]: Monte Carlo estimators and verification experiments
//! * [`io`]: CSV, binary and JSON artifacts

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod center;
pub mod eigen;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod linear;
pub mod model;
pub mod noise;
pub mod spde;
pub mod tridiag;

pub use center::{
    find_center, linearized_center, simulate_center_path, track_center, CenterEstimate,
};
pub use error::{Error, Result};
pub use experiments::{
    compute_d_epsilon, estimate_diffusion, gaussianity_report, noise_projection_check,
    DiffusionEstimate, GaussianityReport, NoiseProjectionReport,
};
pub use grid::{build_grid, inner_product, Field, Grid1D};
pub use linear::{assemble_operator, eigen_spectrum, LinearOperator, SpectrumResult};
pub use spde::{CoupledState, Initial, Mode, SimConfig, Trajectory};
