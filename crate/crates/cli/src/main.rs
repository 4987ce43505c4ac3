use std::path::PathBuf;
use std::process::ExitCode;

use cbf_cli::{parse_config, render_config, run_command, write_outputs, CliError, ExperimentKind, Result};
use clap::{Parser, Subcommand};

/// Pseudo-spectral Brinkman-Forchheimer experiments on the periodic square.
#[derive(Debug, Parser)]
#[command(name = "cbf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Config file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's top-level `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's top-level `output` directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Validate the config and print it with defaults filled in.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    Simulate(RunArgs),
    EnergyAudit(RunArgs),
    Absorbing(RunArgs),
    Frechet(RunArgs),
    Lyapunov(RunArgs),
    Semicontinuity(RunArgs),
    Verify(RunArgs),
}

impl Command {
    fn split(self) -> (ExperimentKind, RunArgs) {
        match self {
            Command::Simulate(a) => (ExperimentKind::Simulate, a),
            Command::EnergyAudit(a) => (ExperimentKind::EnergyAudit, a),
            Command::Absorbing(a) => (ExperimentKind::Absorbing, a),
            Command::Frechet(a) => (ExperimentKind::Frechet, a),
            Command::Lyapunov(a) => (ExperimentKind::Lyapunov, a),
            Command::Semicontinuity(a) => (ExperimentKind::Semicontinuity, a),
            Command::Verify(a) => (ExperimentKind::Verify, a),
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("CBF_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| CliError::Missing(format!("CBF_THREADS must be a positive integer, got `{v}`")))?;
    if n == 0 {
        return Err(CliError::Missing("CBF_THREADS must be at least 1".into()));
    }
    // fails only if a pool already exists, which cannot happen this early
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn execute(kind: ExperimentKind, args: RunArgs) -> Result<bool> {
    configure_threads()?;
    let text = std::fs::read_to_string(&args.config)
        .map_err(|source| CliError::Io { path: args.config.clone(), source })?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output = out;
    }
    if cfg.experiment.kind() != kind {
        return Err(CliError::KindMismatch { requested: kind.to_string(), configured: cfg.experiment.kind().to_string() });
    }
    let rendered = render_config(&cfg);
    if args.dry_run {
        cbf_cli::run::setup(&cfg)?;
        print!("{rendered}");
        return Ok(true);
    }
    let outcome = run_command(&cfg, kind)?;
    let written = write_outputs(&outcome, &rendered, &cfg.output)?;
    for r in &outcome.reports {
        println!("{r}");
    }
    println!(
        "{} reports, {} failed; {} files in {}",
        outcome.reports.len(),
        outcome.failures(),
        written.len(),
        cfg.output.display()
    );
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    let (kind, args) = Cli::parse().command.split();
    match execute(kind, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
