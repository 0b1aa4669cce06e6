use std::path::{Path, PathBuf};
use std::process::ExitCode;

use accelopt_cli::bounds::run_bounds;
use accelopt_cli::certify::{certify_dir, describe};
use accelopt_cli::config::{ExperimentConfig, Profile};
use accelopt_cli::experiment;
use accelopt_cli::{resolve_out, OUT_ROOT_ENV};
use anyhow::Result;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "accelopt", version, about = "Accelerated first-order solvers with bound certificates")]
struct Cli {
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (relative paths are placed under $ACCELOPT_OUT_ROOT).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Instance-size profile used for parameters the config leaves unset.
    #[arg(long, global = true, value_enum)]
    profile: Option<Profile>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the instance, solve for a reference and run every solver.
    Run { config: PathBuf },
    /// Sweep α (and κ) and compare Lyapunov bounds against α = 1.
    Bounds { config: PathBuf },
    /// Re-evaluate certificates for a run directory.
    Certify { dir: PathBuf },
}

fn load(cli: &Cli, path: &Path) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(path, cli.profile)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
    let root = std::env::var_os(OUT_ROOT_ENV).map(PathBuf::from);
    Ok((cfg, resolve_out(&out, root.as_deref())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Run { config } => {
            let (cfg, dir) = load(cli, config)?;
            let summary = experiment::run(&cfg, &dir)?;
            for s in &summary.solvers {
                if let Some(c) = &s.certificate {
                    println!("{}", describe(c));
                }
            }
            println!("artifacts in {}", dir.display());
            Ok(if summary.violation_count() == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Bounds { config } => {
            let (cfg, dir) = load(cli, config)?;
            run_bounds(&cfg, &dir)?;
            print!("{}", std::fs::read_to_string(dir.join("bounds_summary.txt"))?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Certify { dir } => {
            let outcome = certify_dir(dir)?;
            for l in &outcome.labels {
                println!("{}", describe(l));
            }
            Ok(if outcome.violation_count() == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
