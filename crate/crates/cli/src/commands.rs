//! One function per subcommand. Each writes its artifacts into `out` and
//! returns their file names.

use std::path::Path;

use serde::Serialize;

use twinfront::experiments::stats::gaussianity_report;
use twinfront::experiments::{
    compute_d_epsilon, noise_projection_check, run_barrier_experiment, run_boundedness_experiment,
    run_center_ensemble, run_comparison_experiment, BarrierOptions, NoiseProjectionOptions,
};
use twinfront::io::{
    write_center_csv, write_decay_csv, write_json, write_spectrum_csv, write_table_csv,
    write_trajectory_binary, write_trajectory_csv, Report,
};
use twinfront::linear::{evolve_linear_pair, fit_decay_rate};
use twinfront::model::{
    instanton_derivative_field, COUPLED_FRONT_DIFFUSION, SINGLE_FRONT_DIFFUSION,
};
use twinfront::{
    assemble_operator, eigen_spectrum, inner_product, simulate_center_path, Field, Mode,
};

use crate::config::{Experiment, RunConfig, TrajectoryFormat};
use crate::error::CliError;

type Outputs = Result<Vec<String>, CliError>;

struct Sink<'a> {
    dir: &'a Path,
    names: Vec<String>,
}

impl<'a> Sink<'a> {
    fn path(&mut self, name: &str) -> std::path::PathBuf {
        self.names.push(name.to_string());
        self.dir.join(name)
    }

    fn json<T: Serialize>(&mut self, name: &str, cfg: &RunConfig, body: T) -> Result<(), CliError> {
        let p = self.path(name);
        write_json(&p, &Report::new(&cfg.sim, body))?;
        Ok(())
    }
}

pub fn run(experiment: Experiment, cfg: &RunConfig, out: &Path) -> Outputs {
    let mut sink = Sink {
        dir: out,
        names: Vec::new(),
    };
    match experiment {
        Experiment::Simulate => simulate(cfg, &mut sink)?,
        Experiment::Track => track(cfg, &mut sink)?,
        Experiment::Spectrum => spectrum(cfg, &mut sink)?,
        Experiment::LinearDecay => linear_decay(cfg, &mut sink)?,
        Experiment::Diffusion => diffusion(cfg, &mut sink)?,
        Experiment::NoiseProjection => noise_projection(cfg, &mut sink)?,
        Experiment::VerifyComparison => {
            let r = run_comparison_experiment(&cfg.sim, cfg.options.offset, cfg.options.n_seeds)?;
            sink.json("comparison.json", cfg, r)?;
        }
        Experiment::VerifyBarrier => {
            let o = BarrierOptions {
                radius_base: cfg.options.barrier_radius_base,
                speed: cfg.options.barrier_speed,
                horizons: cfg.options.barrier_horizons,
            };
            let r = run_barrier_experiment(&cfg.sim, &o)?;
            let rows: Vec<Vec<f64>> = r
                .rows
                .iter()
                .map(|row| vec![row.horizon, row.radius, row.center_discrepancy])
                .collect();
            let p = sink.path("barrier.csv");
            write_table_csv(&p, &["horizon", "radius", "center_discrepancy"], &rows)?;
            sink.json("barrier.json", cfg, r)?;
        }
        Experiment::VerifyBounded => {
            let r = run_boundedness_experiment(&cfg.sim, cfg.options.n_seeds)?;
            sink.json("boundedness.json", cfg, r)?;
        }
        Experiment::DEpsilon => {
            let grid = cfg.sim.grid()?;
            let d = compute_d_epsilon(cfg.sim.epsilon, &grid, cfg.x0())?;
            #[derive(Serialize)]
            struct DEps {
                epsilon: f64,
                x0: f64,
                d_epsilon: f64,
            }
            sink.json(
                "d_epsilon.json",
                cfg,
                DEps {
                    epsilon: cfg.sim.epsilon,
                    x0: cfg.x0(),
                    d_epsilon: d,
                },
            )?;
        }
    }
    Ok(sink.names)
}

fn simulate(cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    let traj = twinfront::spde::simulate(&cfg.sim)?;
    match cfg.options.trajectory_format {
        TrajectoryFormat::Csv => write_trajectory_csv(&sink.path("trajectory.csv"), &traj)?,
        TrajectoryFormat::Binary => write_trajectory_binary(&sink.path("trajectory.bin"), &traj)?,
    }
    Ok(())
}

fn track(cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    let rows = simulate_center_path(&cfg.sim, 0)?;
    write_center_csv(&sink.path("centers.csv"), &rows)?;
    Ok(())
}

fn spectrum(cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    let grid = cfg.sim.grid()?;
    let op = assemble_operator(&grid, cfg.x0(), 0.0)?;
    let s = eigen_spectrum(&op, cfg.options.n_eigen)?;
    write_spectrum_csv(&sink.path("spectrum.csv"), &s.eigenvalues)?;
    #[derive(Serialize)]
    struct Spec {
        x0: f64,
        eigenvalues: Vec<f64>,
        gap: f64,
    }
    sink.json(
        "spectrum.json",
        cfg,
        Spec {
            x0: cfg.x0(),
            eigenvalues: s.eigenvalues.clone(),
            gap: s.gap,
        },
    )
}

fn linear_decay(cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    let grid = cfg.sim.grid()?;
    let x0 = cfg.x0();
    let (t_end, dt) = (cfg.options.decay_t_end, cfg.options.decay_dt);
    let window = (0.5 * t_end, t_end);
    let u0 = Field::from_fn(grid, |x| (-(x - x0 - 1.0).powi(2)).exp());
    let v0 = Field::from_fn(grid, |x| 0.5 * (-(x - x0 + 0.5).powi(2) / 2.0).exp());
    let run = evolve_linear_pair(&u0, &v0, cfg.sim.lambda, x0, t_end, dt)?;
    write_decay_csv(&sink.path("decay.csv"), &run.records)?;
    let minus: Vec<(f64, f64)> = run
        .records
        .iter()
        .map(|r| (r.t, r.proj_minus.abs()))
        .collect();
    let minus_rate = fit_decay_rate(&minus, window)?;

    let mode = instanton_derivative_field(&grid, x0, true);
    let c = inner_product(&u0.add(&v0), &mode)?;
    let u = u0.lincomb(1.0, &mode, -0.5 * c);
    let v = v0.lincomb(1.0, &mode, -0.5 * c);
    let orth = evolve_linear_pair(&u, &v, cfg.sim.lambda, x0, t_end, dt)?;
    write_decay_csv(&sink.path("decay_orthogonal.csv"), &orth.records)?;
    let series: Vec<(f64, f64)> = orth.records.iter().map(|r| (r.t, r.orth_norm)).collect();
    let orth_rate = fit_decay_rate(&series, window)?;

    #[derive(Serialize)]
    struct Decay {
        lambda: f64,
        window: (f64, f64),
        minus_rate: f64,
        minus_rate_expected: f64,
        orthogonal_rate: f64,
    }
    sink.json(
        "decay.json",
        cfg,
        Decay {
            lambda: cfg.sim.lambda,
            window,
            minus_rate,
            minus_rate_expected: 2.0 * cfg.sim.lambda,
            orthogonal_rate: orth_rate,
        },
    )
}

fn diffusion(cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    let tau = &cfg.options.tau_grid;
    let ens = run_center_ensemble(&cfg.sim, cfg.options.n_replicas, tau)?;
    let est = ens.estimate()?;
    let d_ref = match cfg.sim.mode {
        Mode::Coupled => COUPLED_FRONT_DIFFUSION,
        Mode::Single => SINGLE_FRONT_DIFFUSION,
    };
    let last = tau.len() - 1;
    let from = (last > 0).then_some(0);
    let increments = ens.standardized_increments(from, last, d_ref);
    let gaussianity = gaussianity_report(&increments).ok();

    let rows: Vec<Vec<f64>> = (0..tau.len())
        .map(|k| {
            vec![
                tau[k],
                est.per_tau_variance[k],
                est.per_tau_mean[k],
                est.per_tau_count[k] as f64,
            ]
        })
        .collect();
    let p = sink.path("diffusion_tau.csv");
    write_table_csv(&p, &["tau", "variance", "mean", "count"], &rows)?;

    let mut header = vec!["replica".to_string()];
    header.extend(tau.iter().map(|t| format!("x_tau_{t}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<f64>> = ens
        .displacements
        .iter()
        .enumerate()
        .map(|(r, xs)| {
            std::iter::once(r as f64)
                .chain(xs.iter().map(|x| x.unwrap_or(f64::NAN)))
                .collect()
        })
        .collect();
    let p = sink.path("diffusion_endpoints.csv");
    write_table_csv(&p, &header, &rows)?;

    #[derive(Serialize)]
    struct Diffusion {
        estimate: twinfront::DiffusionEstimate,
        reference: f64,
        gaussianity: Option<twinfront::GaussianityReport>,
    }
    sink.json(
        "diffusion.json",
        cfg,
        Diffusion {
            estimate: est,
            reference: d_ref,
            gaussianity,
        },
    )
}

fn noise_projection(cfg: &RunConfig, sink: &mut Sink) -> Result<(), CliError> {
    let o = NoiseProjectionOptions {
        t_lo: cfg.options.projection_t_lo,
        t_hi: cfg.options.projection_t_hi,
        window: cfg.options.projection_window,
        amplitude: cfg.options.projection_amplitude,
    };
    let r = noise_projection_check(&cfg.sim, cfg.x0(), cfg.options.n_replicas, &o)?;
    let rows: Vec<Vec<f64>> = r
        .record_times
        .iter()
        .zip(&r.per_time_variance)
        .map(|(t, v)| vec![*t, *v])
        .collect();
    let p = sink.path("noise_variance.csv");
    write_table_csv(&p, &["t", "variance"], &rows)?;
    sink.json("noise_projection.json", cfg, r)
}
