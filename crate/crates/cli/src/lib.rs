//! Command-line front end: scale-function tables, identity grids, Monte
//! Carlo verification reports and the consistency battery.

pub mod args;
pub mod commands;
pub mod failure;
pub mod output;
pub mod report;

use args::{Cli, Command, IdentityCommand, McCommand, ScaleCommand};
use failure::CliResult;

/// Runs one parsed command and returns the emitted text.
pub fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Scale(ScaleCommand::Eval(a)) => commands::scale_eval(a),
        Command::Identity(IdentityCommand::Eval(a)) => commands::identity_eval(a),
        Command::Mc(McCommand::Verify(a)) => commands::mc_verify(a),
        Command::CompareReport(a) => report::compare_report(a),
    }
}
