//! `mlswitch`: learn adaptation rules, simulate a serving policy, compare
//! policies and report comparison results.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use mlswitch_core::config::ExperimentConfig;
use mlswitch_core::experiment;

#[derive(Debug, Parser)]
#[command(name = "mlswitch", version, about = "QoS-aware ML model switching experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// TOML experiment configuration; defaults to the desk-scale scenario.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Master seed (overrides `seed`).
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// adamls, naive or static:<model>.
    #[arg(long, global = true, value_name = "NAME")]
    policy: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build rule matrices from the profiles.
    Learn,
    /// Run one policy and write per-request results and the event log.
    Simulate,
    /// Run every policy on the same workload and write comparison tables.
    Compare,
    /// Rank the policies of a comparison directory.
    Report {
        /// Directory holding summary.csv and utility_sweep.csv; defaults to <out>/compare.
        dir: Option<PathBuf>,
    },
}

fn load_config(global: &Global) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = match &global.config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("loading config {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    let out = global.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
    Ok((cfg, out))
}

fn run(cli: Cli) -> Result<()> {
    let (cfg, out) = load_config(&cli.global)?;
    match cli.command {
        Command::Learn => {
            let learned = experiment::learn(&cfg, &out)?;
            for (id, m) in &learned.learned {
                println!("{id}: k={} centroids={:?}", m.clustered.k(), m.clustered.centroids);
            }
            println!(
                "wrote {} rule files under {}",
                learned.rule_files.len(),
                out.join(experiment::RULES_DIR).display()
            );
        }
        Command::Simulate => {
            let policy = cli.global.policy.as_deref().unwrap_or("adamls");
            let sim = experiment::simulate(&cfg, policy, &out)?;
            print!("{}", experiment::format_summaries(std::slice::from_ref(&sim.summary)));
            println!("wrote {}", sim.dir.display());
        }
        Command::Compare => {
            if cli.global.policy.is_some() {
                anyhow::bail!("--policy does not apply to compare, which runs every policy");
            }
            let comparison = experiment::compare(&cfg, &out)?;
            print!("{}", experiment::format_summaries(&comparison.summaries));
            println!("wrote {}", out.join("compare").display());
        }
        Command::Report { dir } => {
            let dir = dir.unwrap_or_else(|| out.join("compare"));
            print!("{}", experiment::report(&dir)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
