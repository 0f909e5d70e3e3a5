use std::process::ExitCode;

use clap::Parser;
use dampwave::cli::{main_with, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    ExitCode::from(main_with(Cli::parse()))
}
