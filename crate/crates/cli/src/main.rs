use std::process::ExitCode;

use clap::Parser;
use randlink_cli::{configure_threads, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("randlink: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
