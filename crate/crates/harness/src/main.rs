use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use swlab::{run_experiment, ExperimentConfig, ExperimentKind, HarnessError};

/// Run one spiked Wigner experiment and write its summary.
///
/// Exit status: 0 when the experiment's criterion holds, 1 when it fails its
/// tolerance, 2 on bad input, 3 on internal errors.
#[derive(Parser, Debug)]
#[command(name = "swlab", version, about)]
struct Cli {
    /// One of: fixed-point, phase-diagram, glauber, rgd, prgd, amp, compare,
    /// magnetization, curie-weiss, overlap-probe.
    experiment: String,
    /// INI file; global keys first, then the section named after the experiment.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// Problem size N.
    #[arg(long)]
    n: Option<usize>,
    /// Single inverse temperature.
    #[arg(long, conflicts_with = "beta_grid")]
    beta: Option<String>,
    /// Inverse temperature grid `a:b:step` or a comma list.
    #[arg(long)]
    beta_grid: Option<String>,
    /// Signal strength (a single value, `a:b:step` or a comma list).
    #[arg(long)]
    lambda: Option<String>,
    /// Worker threads for independent trials.
    #[arg(long)]
    workers: Option<usize>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let kind: ExperimentKind = cli.experiment.parse()?;
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path, kind)?,
        None => ExperimentConfig::new(kind),
    };
    let mut pairs: Vec<(String, String)> = Vec::new();
    if let Some(v) = cli.seed {
        pairs.push(("master_seed".into(), v.to_string()));
    }
    if let Some(v) = &cli.out {
        pairs.push(("output_dir".into(), v.display().to_string()));
    }
    if let Some(v) = cli.trials {
        pairs.push(("trials".into(), v.to_string()));
    }
    if let Some(v) = cli.n {
        pairs.push(("n".into(), v.to_string()));
    }
    if let Some(v) = cli.beta.as_ref().or(cli.beta_grid.as_ref()) {
        pairs.push(("beta".into(), v.clone()));
    }
    if let Some(v) = &cli.lambda {
        pairs.push(("lambda".into(), v.clone()));
    }
    if let Some(v) = cli.workers {
        pairs.push(("workers".into(), v.to_string()));
    }
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| HarnessError::Input(format!("override `{o}` is not key=value")))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    for (k, v) in &pairs {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = build_config(&cli).and_then(|cfg| run_experiment(&cfg).map(|s| (cfg, s)));
    match outcome {
        Ok((cfg, s)) => {
            println!(
                "{}: {} (pass fraction {:.3}, {} trials, {} ms) -> {}",
                s.experiment,
                if s.passed { "PASS" } else { "FAIL" },
                s.pass_fraction,
                s.trials,
                s.wall_ms,
                swlab::experiments::summary_path(&cfg).display()
            );
            if s.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("swlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
