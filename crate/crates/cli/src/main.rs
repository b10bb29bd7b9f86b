//! `satd-forge`: mine debt-repayment samples from git histories, filter and
//! judge them, query models for repayments, and score the results.

mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{Options, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "satd-forge", version, about = "SATD repayment mining and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    options: Options,
    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Track debt comments through each repository's history (--repos, --lang, --out)
    Mine,
    /// Turn deleted debt comments into method-level samples (--records, --repos, --out, [--stats])
    Filter,
    /// Keep samples an LLM judge accepts as repayments (--dataset, --endpoint, --model, --out, [--stats])
    Judge,
    /// Ask a model to repay each sample's debt (--dataset, --endpoint, --model, --template, --out)
    Generate,
    /// Score generations against the developers' repayments (--dataset, --generations, --out)
    Evaluate,
    /// Aggregate, correlation, coverage and oracle tables from run files (--runs, --out)
    Report,
    /// Split a dataset by repository into train, validation and test (--dataset, --seed, --out)
    Split,
}

fn execute(command: Command, rc: &RunConfig) -> Result<(), CliError> {
    match command {
        Command::Mine => commands::mine(rc),
        Command::Filter => commands::filter(rc),
        Command::Judge => commands::judge(rc),
        Command::Generate => commands::generate_cmd(rc),
        Command::Evaluate => commands::evaluate(rc),
        Command::Report => commands::report(rc),
        Command::Split => commands::split(rc),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = RunConfig::resolve(&cli.options).and_then(|rc| {
        // Ignore failure: the pool may already exist.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(rc.concurrency).build_global();
        execute(cli.command, &rc)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("satd-forge: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
