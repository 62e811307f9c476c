use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use replearn::experiment::{self, parse_seeds, ExperimentConfig, Mode};
use replearn::Error;

/// Metalearning and multitask experiments over shared linear representations.
#[derive(Parser, Debug)]
#[command(name = "replearn", version)]
struct Args {
    /// metalearn-mon, metalearn-real, metalearn-agn, multitask, reduction,
    /// verify, vc-witness or nrc-scan
    mode: String,
    /// Experiment config file
    #[arg(long)]
    config: PathBuf,
    /// Half-open seed range `a..b`, overriding the config's seeds
    #[arg(long)]
    seed_range: Option<String>,
    /// Output directory, overriding the config's `out`
    #[arg(long)]
    out: Option<PathBuf>,
}

fn execute(args: &Args) -> Result<PathBuf, Error> {
    let mode: Mode = args.mode.parse()?;
    let text = std::fs::read_to_string(&args.config)?;
    let mut cfg = ExperimentConfig::parse(mode, &text)?;
    if let Some(range) = &args.seed_range {
        if !range.contains("..") {
            return Err(Error::InvalidInput(format!("seed range `{range}` needs the form a..b")));
        }
        cfg.seeds = parse_seeds(range).map_err(Error::InvalidInput)?;
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    let threads = experiment::threads_from_env()?;
    let result = experiment::run_with_threads(&cfg, threads)?;
    for (seed, dt) in &result.wallclock {
        log::info!("seed {seed}: {:.3}s", dt.as_secs_f64());
    }
    experiment::write_outputs(&result, &cfg, &cfg.out)?;
    for (k, v) in &result.summary {
        println!("{k}: {v}");
    }
    Ok(cfg.out)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match execute(&args) {
        Ok(out) => {
            log::info!("results written to {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
