use std::path::PathBuf;
use std::process::ExitCode;

use biolage_cli::{execute, load_config, CliError, Scenario};
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "biolage", version, about = "Biological-age jump model runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Individual-based Monte-Carlo ensemble.
    Ibm(Args),
    /// Finite-volume density solver.
    Pde(Args),
    /// Moment cascade.
    Moments(Args),
    /// All three representations plus a comparison report.
    Compare(Args),
    /// chi_k table, shape case, x_max and k0.
    AnalyzeChi(Args),
}

#[derive(Debug, clap::Args)]
struct Args {
    /// TOML or JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides numerics.seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

/// Exit status when the run succeeded but a comparison check failed.
const COMPARISON_FAILED: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (scenario, args) = match cli.command {
        Command::Ibm(a) => (Scenario::Ibm, a),
        Command::Pde(a) => (Scenario::Pde, a),
        Command::Moments(a) => (Scenario::Moments, a),
        Command::Compare(a) => (Scenario::Compare, a),
        Command::AnalyzeChi(a) => (Scenario::AnalyzeChi, a),
    };
    let level = if args.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = std::env::var("BIOLAGE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::warn!("could not size the worker pool: {e}");
        }
    }

    match run(scenario, &args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(scenario: Scenario, args: &Args) -> Result<ExitCode, CliError> {
    let mut spec = load_config(&args.config)?;
    spec.scenario = scenario;
    if let Some(seed) = args.seed {
        spec.numerics.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| spec.output.dir.clone())
        .ok_or_else(|| {
            CliError::Parse("no output directory: pass --out or set output.dir".into())
        })?;
    let outcome = execute(&spec, &out)?;
    if !args.quiet {
        print!("{}", outcome.summary);
        println!(
            "{} files written to {} (manifest.json)",
            outcome.manifest.files.len(),
            out.display()
        );
    }
    Ok(match outcome.report {
        Some(r) if !r.passed() => ExitCode::from(COMPARISON_FAILED),
        _ => ExitCode::SUCCESS,
    })
}
