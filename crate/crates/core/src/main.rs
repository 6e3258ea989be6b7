use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use ergomix::cli::{self, Command, Format, EXIT_CONFIG};

/// Rank-one cutting-and-stacking experiments.
#[derive(Debug, Parser)]
#[command(name = "ergomix", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let started = Instant::now();
    let code = match run(&args) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            EXIT_CONFIG
        }
    };
    eprintln!("{} finished in {:.3} s", args.command.name(), started.elapsed().as_secs_f64());
    ExitCode::from(code as u8)
}

fn run(args: &Args) -> Result<i32, cli::RunError> {
    let mut config = cli::load_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let report = cli::run_command(args.command, &config)?;
    cli::emit_report(&report, args.format, args.out.as_deref())?;
    if let Some(witness) = &report.property_failure {
        eprintln!("property check failed: {witness}");
    }
    Ok(report.exit_code())
}
