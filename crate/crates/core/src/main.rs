use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use arzsim::scenario::{self, fmt};
use arzsim::Error;

#[derive(Parser)]
#[command(name = "arzsim", version, about = "ARZ traffic with fixed and moving flux constraints")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write its CSV files.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Refinement study against the exact Riemann solution.
    Study {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 4)]
        refinements: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load and validate a scenario without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn exit_code(e: &Error) -> ExitCode {
    match e {
        Error::Config { .. } => ExitCode::from(2),
        _ => ExitCode::from(3),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Validate { config } => scenario::load_scenario(&config).map(|s| {
            println!("ok: {} with {} segments", s.scheme.name(), s.datum.states.len());
        }),
        Cmd::Run { config, out } => scenario::load_scenario(&config)
            .and_then(|s| scenario::run_scenario(&s, &out))
            .map(|rep| println!("{}", rep.header())),
        Cmd::Study { config, refinements, out } => scenario::load_scenario(&config)
            .and_then(|s| scenario::convergence_study(&s, refinements, &out))
            .map(|rows| {
                println!("cells h l1_error order");
                for r in rows {
                    let order = r.order.map(fmt).unwrap_or_else(|| "-".into());
                    println!("{} {} {} {}", r.cells, fmt(r.h), fmt(r.l1_error), order);
                }
            }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
