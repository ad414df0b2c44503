use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use liouville_core::harness::{configure_threads, run_experiment, ExitStatus, Experiment, ExperimentConfig};
use liouville_core::Result;

/// Spectral simulation and verification experiments for Liouville theory on the torus.
#[derive(Debug, Parser)]
#[command(name = "liouville", version)]
struct Cli {
    /// One of: spectrum, gff-cov, gmc-moments, green, partition, simulate, invariance, blowup.
    experiment: String,

    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,

    #[arg(long)]
    seed: Option<u64>,

    #[arg(long)]
    replicas: Option<usize>,

    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Run even if the admissibility bounds fail.
    #[arg(long)]
    override_seiberg: bool,
}

fn run(cli: &Cli) -> Result<ExitStatus> {
    let experiment: Experiment = cli.experiment.parse()?;
    let mut config = ExperimentConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.mc.seed = seed;
    }
    if let Some(r) = cli.replicas {
        config.mc.replicas = r;
    }
    if let Some(out) = &cli.out {
        config.output.dir = out.clone();
    }
    config.override_seiberg |= cli.override_seiberg;
    configure_threads(&config)?;
    let outcome = run_experiment(experiment, &config)?;
    println!(
        "{} {} -> {}",
        experiment,
        if outcome.report.pass { "pass" } else { "FAIL" },
        outcome.out_dir.display()
    );
    Ok(outcome.exit_status())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let status = match run(&cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::from_error(&e)
        }
    };
    ExitCode::from(status.code() as u8)
}
