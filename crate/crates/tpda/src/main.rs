use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tpda::commands::{self, CliError};
use tpda::Report;

/// Reachability checker for timed pushdown automata.
#[derive(Parser)]
#[command(name = "tpda", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a control state is reachable.
    Check {
        model: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long)]
        json: bool,
        /// Print the symbolic run leading to the target.
        #[arg(long)]
        witness: bool,
    },
    /// Explore the concrete semantics on a rational grid.
    Simulate {
        model: PathBuf,
        #[arg(long)]
        max_steps: usize,
        #[arg(long)]
        denominator: u64,
        /// Stop after this many distinct configurations.
        #[arg(long)]
        max_configs: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Report the size of the generated symbolic system.
    TranslateStats {
        model: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long)]
        json: bool,
    },
    /// Print a chain of region rotations.
    Regions {
        /// A region such as "{R:0, x:1} < {y:2}".
        #[arg(long)]
        items: String,
        #[arg(long, default_value_t = 1)]
        rotate: usize,
        /// Keep the reference clock R in place.
        #[arg(long)]
        pin_ref: bool,
        /// Largest constant; defaults to the largest value in the region.
        #[arg(long)]
        cmax: Option<u32>,
        /// Names to read as stack symbols instead of clocks.
        #[arg(long, value_delimiter = ',')]
        symbols: Vec<String>,
    },
}

fn emit(report: &Report, json: bool) {
    if json {
        println!("{}", report.to_json());
    } else {
        print!("{report}");
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Check {
            model,
            target,
            json,
            witness,
        } => emit(
            &commands::check(&commands::load(&model)?, &target, witness)?,
            json,
        ),
        Command::Simulate {
            model,
            max_steps,
            denominator,
            max_configs,
            json,
        } => emit(
            &commands::simulate(&commands::load(&model)?, max_steps, denominator, max_configs)?,
            json,
        ),
        Command::TranslateStats { model, target, json } => emit(
            &commands::translate_stats(&commands::load(&model)?, &target)?,
            json,
        ),
        Command::Regions {
            items,
            rotate,
            pin_ref,
            cmax,
            symbols,
        } => {
            for line in commands::regions(&items, rotate, pin_ref, cmax, &symbols)? {
                println!("{line}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
