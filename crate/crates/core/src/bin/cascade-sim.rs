use std::process::ExitCode;

use cascade_sim::cli::{describe, run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.load().and_then(|config| run(cli.command, &config, &cli.config, &cli.out));
    match result {
        Ok(manifest) => {
            println!("{}", describe(&manifest));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
