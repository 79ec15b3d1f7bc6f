use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use loglab_cli::{execute, Cli, EXIT_CONFIG, EXIT_OK};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LOGLAB_LOG", "error"))
        .target(env_logger::Target::Stderr)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            });
        }
    };
    ExitCode::from(execute(&cli))
}
