use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nes_core::{run_experiment, ExperimentConfig, ExperimentKind};

/// Runs one experiment and writes its report.
#[derive(Parser, Debug)]
#[command(name = "nes-solve", version, about)]
struct Args {
    /// elliptic1d, semilinear2d, norm_study, heat, allen_cahn or rate_study
    experiment: String,
    /// TOML experiment file
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config file
    #[arg(long)]
    seed: Option<u64>,
    /// Use the large problem sizes (slow)
    #[arg(long)]
    full_scale: bool,
    /// Directory for results.json, errors.csv, plot.csv and timing.json
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 2 if any acceptance threshold is missed
    #[arg(long)]
    check: bool,
}

fn run(args: &Args) -> Result<bool, String> {
    if let Ok(threads) = std::env::var("NES_THREADS") {
        let n: usize = threads
            .parse()
            .map_err(|_| format!("NES_THREADS must be a positive integer, got `{threads}`"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    let kind = ExperimentKind::parse(&args.experiment).map_err(|e| e.to_string())?;
    let mut cfg = ExperimentConfig::load(&args.config).map_err(|e| format!("{}: {e}", args.config.display()))?;
    if cfg.experiment != kind {
        return Err(format!(
            "{} configures `{}`, not `{}`",
            args.config.display(),
            cfg.experiment.name(),
            kind.name()
        ));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.full_scale || cfg.full_scale {
        cfg.apply_full_scale();
    }
    let report = run_experiment(&cfg, args.out.as_deref()).map_err(|e| e.to_string())?;
    let metrics = serde_json::to_string_pretty(&report.metrics).map_err(|e| e.to_string())?;
    println!("{metrics}");
    for c in &report.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {}: {}", c.name, c.detail);
    }
    println!("{:.2}s", report.seconds);
    Ok(report.passed())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(passed) if args.check && !passed => ExitCode::from(2),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nes-solve: {e}");
            ExitCode::FAILURE
        }
    }
}
