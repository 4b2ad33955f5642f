use std::process::ExitCode;

use answipt_cli::commands::{run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("answipt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
