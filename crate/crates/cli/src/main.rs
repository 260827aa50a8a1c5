#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod table;

use std::process::ExitCode;

use clap::Parser;
use halfline::Error;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (out, result) = match &cli.command {
        Command::Kernel(a) => (&a.common.out, commands::kernel_cmd(a)),
        Command::Evolve(a) => (&a.common.out, commands::evolve_cmd(a)),
        Command::DispersiveScan(a) => (&a.common.out, commands::dispersive_cmd(a)),
        Command::ThresholdScan(a) => (&a.common.out, commands::threshold_cmd(a)),
        Command::OracleCompare(a) => (&a.common.out, commands::oracle_cmd(a)),
    };
    let table = match result {
        Ok(t) => t,
        Err(e) => {
            eprintln!("halfline: {e}");
            return match e {
                Error::Domain { .. } | Error::Precondition(_) | Error::Resolution(_) => {
                    ExitCode::from(1)
                }
                Error::Degenerate(_) | Error::NoConvergence { .. } => ExitCode::from(2),
            };
        }
    };
    if let Err(e) = table.write(out.as_deref()) {
        eprintln!("halfline: cannot write output: {e}");
        return ExitCode::from(1);
    }
    if table.warnings.is_empty() {
        ExitCode::SUCCESS
    } else {
        for w in &table.warnings {
            eprintln!("halfline: warning: {w}");
        }
        ExitCode::from(2)
    }
}
