use std::process::ExitCode;

use clap::Parser;
use conjugen_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match conjugen_cli::run(&cli, &mut std::io::stdout().lock()) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
