use std::process::ExitCode;

use clap::Parser;
use drawdown_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match drawdown_cli::run(&cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
