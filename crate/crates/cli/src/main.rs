mod args;
mod commands;
mod error;
mod manifest;
mod settings;

use clap::Parser;
use log::error;
use std::process::ExitCode;

use args::{Cli, Command};
use error::CliError;
use manifest::Record;
use settings::{load_section, merge};

fn run(cli: &Cli, rec: &mut Record) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => load_section(path, cli.command.name())?,
        None => None,
    };
    match &cli.command {
        Command::Simulate(a) => commands::simulate(merge(a, file)?, rec),
        Command::BuildDataset(a) => commands::build(merge(a, file)?, rec),
        Command::Train(a) => commands::train(merge(a, file)?, rec),
        Command::Evaluate(a) => commands::evaluate_cmd(merge(a, file)?, rec),
        Command::Sweep(a) => commands::sweep(merge(a, file)?, rec),
        Command::Opening(a) => commands::opening_cmd(merge(a, file)?, rec),
        Command::Pca(a) => commands::pca_cmd(merge(a, file)?, rec),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .init();

    let mut rec = Record::new(cli.command.name(), cli.manifest.clone());
    let result = run(&cli, &mut rec);
    let (code, message) = match &result {
        Ok(()) => (0, None),
        Err(e) => {
            error!("{e}");
            (e.exit_code(), Some(e.to_string()))
        }
    };
    match rec.write(code, message) {
        Ok(_) => ExitCode::from(code),
        Err(e) => {
            error!("could not write manifest: {e}");
            ExitCode::from(if code == 0 { 3 } else { code })
        }
    }
}
