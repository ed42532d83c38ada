use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use nematic_blowup::cli_io::runner::{resume, run, RunSummary, StopReason};
use nematic_blowup::cli_io::sweep::sweep;
use nematic_blowup::cli_io::verify::{format_table, verify};
use nematic_blowup::cli_io::RunConfig;

#[derive(Parser)]
#[command(version, about = "Focusing simulations of the reduced nematic flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the invariant suite and print a pass/fail table.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the cartesian product of the sweep axes.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Concurrent trajectories (0: one per core).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Continue a run from its checkpoint.
    Resume {
        /// Run directory or its checkpoint.json.
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

fn report(s: &RunSummary) -> ExitCode {
    println!(
        "stop: {}  steps: {}  t: {:.6e}  lambda: {:.6e}",
        s.stop_reason.as_str(),
        s.steps,
        s.t_final,
        s.lambda_final
    );
    let focused = matches!(s.stop_reason, StopReason::LambdaStop | StopReason::Resolution);
    if let Some(fit) = s.riccati.as_ref().and_then(|r| r.blowup).filter(|_| focused) {
        println!("T* = {:.6e}  (R^2 = {:.6})", fit.t_star, fit.r_squared);
    }
    match s.stop_reason {
        StopReason::Nan | StopReason::TrackingLost => ExitCode::from(3),
        _ => ExitCode::SUCCESS,
    }
}

fn run_dir(p: &Path) -> PathBuf {
    if p.is_file() {
        p.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
    } else {
        p.to_path_buf()
    }
}

fn main() -> anyhow::Result<ExitCode> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let s = run(cfg, &out).with_context(|| format!("run in {}", out.display()))?;
            Ok(report(&s))
        }
        Command::Verify { config } => {
            let cfg = RunConfig::load(&config)?;
            let rows = verify(&cfg)?;
            print!("{}", format_table(&rows));
            let failed = rows.iter().filter(|r| !r.pass).count();
            println!("{} checks, {} failed", rows.len(), failed);
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Sweep { config, out, threads } => {
            let cfg = RunConfig::load(&config)?;
            if cfg.sweep.is_none() {
                bail!("{} has no [sweep] section", config.display());
            }
            let outcomes = sweep(&cfg, &out, threads)?;
            let failed = outcomes.iter().filter(|o| o.result.is_err()).count();
            println!(
                "{} points, {} failed; summary in {}",
                outcomes.len(),
                failed,
                out.join("summary.csv").display()
            );
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Resume { checkpoint } => {
            let dir = run_dir(&checkpoint);
            let s = resume(&dir).with_context(|| format!("resume from {}", dir.display()))?;
            Ok(report(&s))
        }
    }
}
