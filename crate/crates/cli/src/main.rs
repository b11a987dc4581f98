use std::process::ExitCode;

use clap::Parser;
use cvrc_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            println!("{}", report.summary);
            for p in &report.written {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cvrc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
