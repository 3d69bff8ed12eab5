use std::process::ExitCode;

use clap::Parser;
use clockphase::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            if let Some(line) = &failure.stdout {
                println!("{line}");
            }
            eprintln!("{}", failure.error.to_json());
            ExitCode::from(failure.error.exit_code() as u8)
        }
    }
}
