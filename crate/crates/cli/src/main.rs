use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use dynrisk_cli::{
    load_experiment, run_command, run_document, CliError, Command, Outcome, Overrides, Report,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

/// Evaluate dynamic robust risk measures and check their properties.
#[derive(Debug, Parser)]
#[command(name = "dynrisk", version)]
struct Args {
    /// evaluate, accept, check, check-tc, construct, audit, table1,
    /// oracle-compare, or `run` for the document's `commands` list.
    #[arg(value_parser = parse_command)]
    command: Invocation,
    /// Experiment document (JSON).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Report only this time.
    #[arg(long)]
    time: Option<usize>,
    /// Sampling seed for checks.
    #[arg(long)]
    seed: Option<u64>,
    /// Trials per randomized check.
    #[arg(long)]
    trials: Option<usize>,
    /// Comparison tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Append grid-oracle comparisons to `evaluate`.
    #[arg(long)]
    oracle: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Clone, Copy)]
enum Invocation {
    One(Command),
    Document,
}

fn parse_command(s: &str) -> Result<Invocation, String> {
    if s == "run" {
        return Ok(Invocation::Document);
    }
    s.parse()
        .map(Invocation::One)
        .map_err(|e: CliError| e.to_string())
}

fn execute(args: &Args) -> Result<Vec<Report>, CliError> {
    let experiment = args.input.as_deref().map(load_experiment).transpose()?;
    let overrides = Overrides {
        time: args.time,
        seed: args.seed,
        trials: args.trials,
        tol: args.tol,
        oracle: args.oracle,
    };
    match args.command {
        Invocation::One(command) => {
            Ok(vec![run_command(command, experiment.as_ref(), &overrides)?])
        }
        Invocation::Document => {
            let experiment =
                experiment.ok_or_else(|| CliError::Usage("`run` needs --input".to_string()))?;
            run_document(&experiment, &overrides)
        }
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&args) {
        Ok(reports) => {
            let body = match args.format {
                Format::Json if reports.len() == 1 => reports[0].to_json(),
                Format::Json => {
                    serde_json::to_string_pretty(&reports).expect("reports always serialize")
                }
                Format::Text => reports
                    .iter()
                    .map(Report::to_text)
                    .collect::<Vec<_>>()
                    .join("\n"),
            };
            // A closed pipe (for example `| head`) is not an error of the run.
            let _ = writeln!(std::io::stdout().lock(), "{body}");
            let worst = reports
                .iter()
                .map(|r| r.outcome)
                .max()
                .unwrap_or(Outcome::Pass);
            ExitCode::from(worst.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
