use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::Parser;

use cl_observer_sim::config::RunConfig;
use cl_observer_sim::output::write_outputs;
use cl_observer_sim::runner::run;

/// Concurrent-learning adaptive observer simulation.
#[derive(Parser, Debug)]
#[command(name = "cl-sim", version)]
struct Args {
    /// Run configuration file (flat key = value lines).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory for trajectory.csv, events.csv and meta.txt.
    #[arg(long)]
    out: PathBuf,

    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Override any config key, e.g. --override noise_variance=0.001.
    /// Repeatable; applied in order after the config file.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Override the simulated duration in seconds.
    #[arg(long)]
    duration: Option<f64>,

    /// Suppress the run summary on stdout.
    #[arg(long)]
    quiet: bool,
}

fn build_config(args: &Args) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for ov in &args.overrides {
        let (key, value) = ov
            .split_once('=')
            .ok_or_else(|| anyhow!("--override expects KEY=VALUE, got `{ov}`"))?;
        cfg.set(key.trim(), value)
            .with_context(|| format!("--override {ov}"))?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(duration) = args.duration {
        cfg.duration = duration;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match try_main(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cl-sim: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn try_main(args: &Args) -> Result<()> {
    let cfg = build_config(args)?;
    let log = run(&cfg)?;
    write_outputs(&log, &args.out)?;
    if !args.quiet {
        let (x_err, theta_err) = log
            .records
            .last()
            .map(|r| (r.x_err, r.theta_err))
            .unwrap_or((0.0, 0.0));
        println!(
            "cl-sim: {} records, {} events, {} purges; final x_err {:.3e}, theta_err {:.3e}",
            log.records.len(),
            log.events.len(),
            log.purge_count,
            x_err,
            theta_err
        );
    }
    Ok(())
}
