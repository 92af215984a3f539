use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use playout_cli::{run, write_outputs, CliError, ExperimentSpec, Kind, RunOptions};

/// Overrides the output directory unless `--out` is given.
const OUT_DIR_ENV: &str = "PLAYOUT_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "playout-out";

/// Seeded forecasting experiments: writes transcript.csv, summary.json and
/// (with `horizons`) curve.csv. Exit status 0 on success, 1 for bad input,
/// 2 for an invariant violation or failed check, 3 for a capacity limit.
#[derive(Debug, Parser)]
#[command(name = "playout", version)]
struct Args {
    /// Experiment config (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory; beats PLAYOUT_OUT_DIR and the config's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: available processors).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_parser = parse_kind)]
    kind: Option<Kind>,
    /// Record wall_time_s in the summary (makes reruns differ).
    #[arg(long)]
    timing: bool,
}

fn parse_kind(s: &str) -> Result<Kind, String> {
    s.parse()
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("playout: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> Result<(), CliError> {
    let mut spec = match &args.config {
        Some(path) => ExperimentSpec::parse(&std::fs::read_to_string(path)?)?,
        None => ExperimentSpec::default(),
    };
    if let Some(k) = args.kind {
        spec.kind = Some(k);
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(t) = args.trials {
        spec.trials = Some(t);
    }
    if let Some(w) = args.workers {
        spec.workers = Some(w);
    }
    let dir = args
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or_else(|| spec.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let kind = spec.kind()?;
    eprintln!("playout: kind={} seed={} trials={}", kind.as_str(), spec.seed, spec.trials());
    let out = run(&spec, RunOptions { timing: args.timing })?;
    write_outputs(&dir, &out)?;
    eprintln!("playout: wrote {}", dir.display());
    out.status()
}
