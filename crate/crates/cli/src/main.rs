use std::process::ExitCode;

use clap::Parser;
use convofuse_cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(s) if s.item_errors > 0 => {
            eprintln!("finished with {} item error(s)", s.item_errors);
            ExitCode::from(1)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
