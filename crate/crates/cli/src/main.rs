//! `dampwave`: run, bound, check and sweep damped-wave blow-up experiments.
//!
//! Exit codes: 0 completed, 2 blow-up detected, 3 step underflow, 4 overflow,
//! 1 configuration or runtime error, 5 failed hypothesis check.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(name = "dampwave", version, about = "Blow-up experiments for strongly damped semilinear wave equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, env = "DAMPWAVE_OUT", default_value = "out")]
    out: PathBuf,

    /// Seed for randomized estimates; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the configured problem and write trace.csv and report.json.
    Run,
    /// Evaluate blow-up criteria and time bounds; writes bounds.json.
    Bounds,
    /// Sample the growth hypotheses of the nonlinearity; writes check.json.
    Check,
    /// Manufactured-solution convergence study; writes convergence.{csv,json}.
    Convergence,
    /// Run every point of the [sweep] grid; writes sweep.csv and point_NNNN/.
    Sweep,
}

fn load(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("--config <path> is required"))?;
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn execute(cli: &Cli) -> anyhow::Result<i32> {
    let config = load(cli)?;
    let say = |msg: String| {
        if !cli.quiet {
            println!("{msg}");
        }
    };
    match cli.command {
        Command::Run => {
            let s = commands::execute_run(&config, &cli.out)?;
            say(format!("{:?}", s.outcome));
            if let Some(w) = s.sandwich {
                say(format!(
                    "T_lower = {:e} <= T = {} <= T_upper = {}: {}",
                    w.t_lower, w.t_estimate, w.t_upper, w.holds
                ));
            }
            Ok(commands::exit_code(&s.outcome))
        }
        Command::Bounds => {
            let b = commands::execute_bounds(&config, &cli.out)?;
            say(format!(
                "high-energy criterion: {} (margin {}), E(0) < 0: {}",
                b.criterion_high_energy.holds, b.criterion_high_energy.margin, b.criterion_neg_energy.holds
            ));
            if let Some(u) = b.upper {
                say(format!("T_upper = {} ({:?})", u.best.t_upper, u.best.variant));
            }
            if let Some(l) = b.lower {
                say(format!("T_lower = {:e}", l.t_lower));
            }
            Ok(0)
        }
        Command::Check => {
            let doc = commands::execute_check(&config, &cli.out)?;
            for r in &doc.reports {
                say(format!(
                    "{:?} {}: worst residual {:e} at s = {}",
                    r.hypothesis,
                    if r.passed { "pass" } else { "FAIL" },
                    r.worst_residual,
                    r.argmin
                ));
            }
            Ok(if doc.passed { 0 } else { 5 })
        }
        Command::Convergence => {
            let study = commands::execute_convergence(&config, &cli.out)?;
            say(format!("observed orders: {:?}", study.orders));
            Ok(0)
        }
        Command::Sweep => {
            let failures = commands::execute_sweep(&config, &cli.out)?;
            if failures > 0 {
                say(format!("{failures} sweep point(s) failed; see sweep.csv"));
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("dampwave: {e:#}");
            ExitCode::from(1)
        }
    }
}
