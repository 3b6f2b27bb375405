//! Command-line driver: JSON configs in, JSON or CSV reports out.
//!
//! Exit codes: 0 success, 1 config (or evaluation) error, 2 the reference
//! integral did not converge, 3 a paper-example expectation failed.

mod commands;
mod config;
mod report;

use std::io::Write;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_bound, cmd_compare, cmd_integrate, cmd_paper_example, CommandError, Outcome, PAPER_ABS_ERROR, PAPER_BOUND,
    PAPER_EXACT, PAPER_RULE_VALUE, PAPER_TRAPEZOID, QUARTER_NODE_BOUND, TRAPEZOID_MAIN_TERM,
};
pub use config::{
    BoundRequest, ConfigError, DeclaredCertificates, Experiment, ExperimentConfig, OutputFormat, RuleKind, SweepSpec,
};
pub use report::{
    format_float, to_csv, to_json, BoundFailure, BoundOutcome, CertificateSet, CheckMode, CheckStatus, CompareRow,
    ExperimentReport, FailureCode, Note, PaperCheck, ReportWarning, RuleOutcome,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_ORACLE: i32 = 2;
pub const EXIT_EXPECTATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "stieltjes", version, about = "Quadrature rules and error bounds for Riemann-Stieltjes integrals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply the configured rule (and composite rule) and compare with the reference integral
    Integrate(CommonArgs),
    /// Compute the requested error bounds and check them against the actual error
    Bound(CommonArgs),
    /// Sweep alpha, x and panel counts and tabulate values, errors and bounds
    Compare(CommonArgs),
    /// Reproduce the worked example on [0, 1/8] with f = exp(-t^2), u = t
    PaperExample(OutputArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Emit JSON (default unless the config says otherwise)
    #[arg(long, conflicts_with = "csv")]
    pub json: bool,
    /// Emit CSV
    #[arg(long)]
    pub csv: bool,
    /// Oracle tolerance, overriding the config
    #[arg(long)]
    pub tol: Option<f64>,
    /// Inflation applied to estimated certificates
    #[arg(long)]
    pub safety: Option<f64>,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Path to a JSON config
    #[arg(long, conflicts_with = "config_inline")]
    pub config: Option<String>,
    /// The JSON config itself
    #[arg(long)]
    pub config_inline: Option<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn load(args: &CommonArgs) -> Result<Experiment, ConfigError> {
    let config = match (&args.config, &args.config_inline) {
        (Some(path), _) => ExperimentConfig::from_path(path)?,
        (None, Some(text)) => ExperimentConfig::from_json(text)?,
        (None, None) => return Err(ConfigError::Missing),
    };
    config.validate(args.output.tol, args.output.safety)
}

fn pick_format(args: &OutputArgs, configured: Option<OutputFormat>) -> OutputFormat {
    if args.csv {
        OutputFormat::Csv
    } else if args.json {
        OutputFormat::Json
    } else {
        configured.unwrap_or(OutputFormat::Json)
    }
}

/// Run one parsed invocation; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (result, output, configured) = match &cli.command {
        Command::PaperExample(out) => (cmd_paper_example(out.tol, out.safety), out, None),
        Command::Integrate(args) | Command::Bound(args) | Command::Compare(args) => {
            let experiment = match load(args) {
                Ok(e) => e,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_CONFIG;
                }
            };
            let result = match cli.command {
                Command::Integrate(_) => cmd_integrate(&experiment),
                Command::Bound(_) => cmd_bound(&experiment),
                _ => cmd_compare(&experiment),
            };
            (result, &args.output, experiment.config.output)
        }
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let text = match pick_format(output, configured) {
        OutputFormat::Json => to_json(&outcome.report),
        OutputFormat::Csv => to_csv(&outcome.report),
    };
    let written = match &output.out {
        Some(path) => std::fs::write(path, text.as_bytes()),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e}");
        return EXIT_CONFIG;
    }
    if outcome.expectation_failed {
        EXIT_EXPECTATION
    } else if outcome.oracle_failed {
        EXIT_ORACLE
    } else {
        EXIT_OK
    }
}
