use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use nqcm::cli::{
    json, parse_config, run_command, CliError, Command, OutputFormat, RunOptions, EXIT_INFEASIBLE,
    TOL_OVERRIDE_VAR,
};

/// Synthesize and simulate probabilistic cloning machines.
#[derive(Debug, Parser)]
#[command(name = "nqcm", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON problem file (not needed for `sweep`).
    config: Option<PathBuf>,
    /// Treat warnings (more states than dimensions) as errors.
    #[arg(long)]
    strict: bool,
    /// Omit per-stage timings so reports are byte-reproducible.
    #[arg(long)]
    no_timing: bool,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config trial count.
    #[arg(long)]
    trials: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
}

fn run(args: &Args) -> Result<i32, CliError> {
    if args.format == OutputFormat::Csv && !args.command.supports_csv() {
        return Err(CliError::Config(format!(
            "--format csv is only available for sweep, synth and simulate, not {}",
            args.command.name()
        )));
    }
    let parsed = match &args.config {
        Some(path) => {
            let bytes = std::fs::read(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let mut parsed = parse_config(&bytes, args.strict)?;
            if let Some(seed) = args.seed {
                parsed.config.seed = seed;
            }
            if let Some(trials) = args.trials {
                if trials == 0 {
                    return Err(CliError::Config("--trials must be at least 1".into()));
                }
                parsed.config.trials = trials;
            }
            Some(parsed)
        }
        None => None,
    };
    let opts = RunOptions {
        timing: !args.no_timing,
        tol_override: std::env::var(TOL_OVERRIDE_VAR).ok(),
    };
    let mut report = run_command(args.command, parsed.as_ref().map(|p| &p.config), &opts)?;
    if let Some(p) = &parsed {
        for w in &p.warnings {
            eprintln!("warning: {w}");
        }
        report.warnings = p.warnings.clone();
    }

    let text = match args.format {
        OutputFormat::Json => {
            json::to_canonical_string(&report).map_err(|e| CliError::Io(e.to_string()))?
        }
        OutputFormat::Csv => report
            .to_csv()
            .ok_or_else(|| CliError::Config("report has no table to write as csv".into()))?,
    };
    match &args.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }

    let dependent = report
        .independence
        .as_ref()
        .is_some_and(|ind| !ind.independent);
    Ok(if dependent { EXIT_INFEASIBLE } else { 0 })
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("nqcm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
