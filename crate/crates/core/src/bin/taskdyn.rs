use std::process::ExitCode;

use clap::Parser;
use taskdyn::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if let Some(t) = outcome.diverged {
                eprintln!("taskdyn: trajectory diverged at t = {t}");
            }
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("taskdyn: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
