//! Monte Carlo estimators and deterministic verification experiments.

pub mod d_epsilon;
pub mod diffusion;
pub mod noise_projection;
pub mod stats;
pub mod verification;

pub use d_epsilon::compute_d_epsilon;
pub use diffusion::{estimate_diffusion, run_center_ensemble, CenterEnsemble, DiffusionEstimate};
pub use noise_projection::{noise_projection_check, NoiseProjectionOptions, NoiseProjectionReport};
pub use stats::{gaussianity_report, GaussianityReport};
pub use verification::{
    run_barrier_experiment, run_boundedness_experiment, run_closeness_experiment,
    run_comparison_experiment, BarrierOptions, BarrierReport, BoundednessReport, ClosenessReport,
    ComparisonReport,
};
