use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use twinfront_cli::{execute, output_dir, parse_config, CliError, Experiment, RunManifest};

#[derive(Parser)]
#[command(
    name = "twinfront",
    version,
    about = "Stochastic Allen-Cahn interface experiments"
)]
struct Cli {
    /// Worker threads for replica-parallel experiments (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    Simulate(RunArgs),
    Track(RunArgs),
    Spectrum(RunArgs),
    LinearDecay(RunArgs),
    Diffusion(RunArgs),
    NoiseProjection(RunArgs),
    VerifyComparison(RunArgs),
    VerifyBarrier(RunArgs),
    VerifyBounded(RunArgs),
    DEpsilon(RunArgs),
    /// Re-runs the command recorded in a manifest.
    Rerun {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(command: Command) -> Result<RunManifest, CliError> {
    let (experiment, args) = match command {
        Command::Rerun { manifest, out } => {
            let m = RunManifest::read(&manifest)?;
            let dir = out.unwrap_or(m.output_dir);
            return execute(m.command, &m.config, &dir);
        }
        Command::Simulate(a) => (Experiment::Simulate, a),
        Command::Track(a) => (Experiment::Track, a),
        Command::Spectrum(a) => (Experiment::Spectrum, a),
        Command::LinearDecay(a) => (Experiment::LinearDecay, a),
        Command::Diffusion(a) => (Experiment::Diffusion, a),
        Command::NoiseProjection(a) => (Experiment::NoiseProjection, a),
        Command::VerifyComparison(a) => (Experiment::VerifyComparison, a),
        Command::VerifyBarrier(a) => (Experiment::VerifyBarrier, a),
        Command::VerifyBounded(a) => (Experiment::VerifyBounded, a),
        Command::DEpsilon(a) => (Experiment::DEpsilon, a),
    };
    let mut cfg = parse_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.sim.seed = seed;
    }
    let dir = output_dir(args.out.as_deref(), &cfg);
    execute(experiment, &cfg, &dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("{}", CliError::key("workers", e.to_string()).to_line());
            return ExitCode::from(2);
        }
    }
    match dispatch(cli.command) {
        Ok(m) => {
            for name in &m.outputs {
                println!("{}", m.output_dir.join(name).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
