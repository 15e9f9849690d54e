//! edgerun: scenario runner for semiclassical Dirac interface dynamics.

mod config;
mod run;

use anyhow::Result;
use clap::{Parser, Subcommand};
use config::Scenario;
use run::RunContext;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "edgerun",
    about = "Semiclassical Dirac interface dynamics: simulate, extract phase-space mode densities, transport limiting measures, and compare"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ScenarioArgs {
    /// Scenario config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Run a single eps instead of the configured list
    #[arg(long)]
    eps: Option<f64>,
    /// RNG seed recorded in the manifest (the pipeline itself is RNG-free)
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured initial data; write snapshots and diagnostics
    Simulate(ScenarioArgs),
    /// Project snapshots onto interface modes; write gamma_n densities
    Extract(ScenarioArgs),
    /// Evolve the limiting particle measures along the characteristics
    Transport(ScenarioArgs),
    /// simulate + extract + transport + comparison report
    Pipeline(ScenarioArgs),
    /// Trace the interface chart; write CSV and the assumption report
    Chart(ScenarioArgs),
    /// Run the oracle checks; nonzero exit on failure
    Validate {
        /// Write the JSON summary here instead of stdout only
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn context(args: &ScenarioArgs) -> Result<RunContext> {
    let (scenario, config_text) = Scenario::from_path(&args.config)?;
    Ok(RunContext {
        scenario,
        config_text,
        out_dir: args.out.clone(),
        eps_override: args.eps,
        seed: args.seed,
    })
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(args) => run::simulate(&context(&args)?),
        Command::Extract(args) => run::extract(&context(&args)?),
        Command::Transport(args) => run::transport(&context(&args)?),
        Command::Pipeline(args) => {
            let report = run::pipeline(&context(&args)?)?;
            println!(
                "pipeline {}: {} eps runs, min accounted mass fraction {:.4}",
                report.scenario,
                report.per_eps.len(),
                report
                    .per_eps
                    .iter()
                    .map(|r| r.min_accounted_fraction)
                    .fold(f64::INFINITY, f64::min)
            );
            Ok(())
        }
        Command::Chart(args) => run::chart_cmd(&context(&args)?),
        Command::Validate { out } => {
            let summary = edgerun_core::validation::run_validate();
            for c in &summary.checks {
                println!(
                    "{} {:<26} metric {:.3e}  tol {:.1e}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.metric,
                    c.tolerance
                );
            }
            let json = summary.to_json();
            if let Some(path) = out {
                if let Some(dir) = path.parent() {
                    std::fs::create_dir_all(dir)?;
                }
                std::fs::write(&path, format!("{json}\n"))?;
            }
            if !summary.passed {
                std::process::exit(1);
            }
            Ok(())
        }
    }
}
