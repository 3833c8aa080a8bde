//! `diraclab`: batch driver for the Dirac laboratory.
//!
//! ```text
//! diraclab [--config run.toml] <command> [--section.key=value ...]
//! ```
//!
//! Exit codes: 0 pass, 1 verification failure, 2 solver blowup, 64 usage or
//! configuration error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use diraclab_core::Error;

use commands::Outcome;
use config::{Command, RunConfig};

const EXIT_FAIL: u8 = 1;
const EXIT_BLOWUP: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(name = "diraclab", version, about = "Numerical experiments for the cubic Dirac equation with potential")]
struct Cli {
    /// TOML run configuration.
    #[arg(short, long)]
    config: Option<PathBuf>,

    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Subcommand; may instead be given as `command` in the configuration.
    #[arg(value_enum)]
    command: Option<Command>,
}

/// Splits `--section.key=value` overrides from the arguments clap handles.
fn split_overrides(args: Vec<String>) -> (Vec<String>, Vec<String>) {
    let mut plain = Vec::new();
    let mut overrides = Vec::new();
    for a in args {
        match a.strip_prefix("--") {
            Some(rest) if rest.split('=').next().is_some_and(|k| k.contains('.')) => overrides.push(rest.to_string()),
            _ => plain.push(a),
        }
    }
    (plain, overrides)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::SolverBlowup { .. } => EXIT_BLOWUP,
        Error::InvalidConfig(_)
        | Error::CflViolation { .. }
        | Error::NotApplicable(_)
        | Error::NotImplemented(_)
        | Error::Format(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

fn main() -> ExitCode {
    let (plain, overrides) = split_overrides(std::env::args().collect());
    let cli = match Cli::try_parse_from(plain) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let mut cfg = match RunConfig::load(cli.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let Some(command) = cli.command.or(cfg.command) else {
        eprintln!("error: no command given (use one of verify-algebra, simulate, verify-estimate, cross-validate, report)");
        return ExitCode::from(EXIT_USAGE);
    };
    cfg.command = Some(command);
    let result = match command {
        Command::VerifyAlgebra => commands::verify_algebra_cmd(&cfg),
        Command::Simulate => commands::simulate_cmd(&cfg),
        Command::VerifyEstimate => commands::verify_estimate_cmd(&cfg),
        Command::CrossValidate => commands::cross_validate_cmd(&cfg),
        Command::Report => commands::report_cmd(&cfg),
    };
    match result {
        Ok(Outcome::Pass) => {
            println!("{}: PASS", command.name());
            ExitCode::SUCCESS
        }
        Ok(Outcome::Fail(msg)) => {
            println!("{}: FAIL ({msg})", command.name());
            ExitCode::from(EXIT_FAIL)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
