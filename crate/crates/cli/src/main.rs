//! `panelforge` command-line front end.
//!
//! Exit codes: 0 success, 1 failed check or runtime error, 2 usage error.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod bench;
mod common;
mod model;
mod tune;
mod verify;

use common::Usage;

#[derive(Debug, Parser)]
#[command(
    name = "panelforge",
    version,
    about = "Cache-blocked GEMM: verify, benchmark, tune, model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the blocked variants against the naive oracle.
    Verify(verify::Args),
    /// Time GEMMs over a workload and emit CSV.
    Bench(bench::Args),
    /// Search the micro-kernel grid and persist the winners.
    Tune(tune::Args),
    /// Print the analytical blocking and cache occupancy for a shape.
    Model(model::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(args) => verify::run(args),
        Command::Bench(args) => bench::run(args),
        Command::Tune(args) => tune::run(args),
        Command::Model(args) => model::run(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if is_usage(&err) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn is_usage(err: &anyhow::Error) -> bool {
    if err.downcast_ref::<Usage>().is_some() {
        return true;
    }
    matches!(
        err.downcast_ref::<panelforge::Error>(),
        Some(
            panelforge::Error::EmptyGrid
                | panelforge::Error::InvalidArgument(_)
                | panelforge::Error::InvalidShape { .. }
                | panelforge::Error::UnsupportedPlan(_)
                | panelforge::Error::ZeroDimension { .. }
        )
    )
}
