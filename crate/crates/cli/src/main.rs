//! `bridgerank`: a vote-data pipeline. Cluster an opinion space, score
//! bridging signals, rank feeds, measure polarization metrics, and run
//! policy-comparison simulations.
//!
//! Exit codes: 0 success, 2 input or schema error, 3 numerical failure.
//! Set `BRIDGERANK_LOG=debug` for verbose logging.

mod commands;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bridgerank", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Project votes into a 2D opinion space and cluster people.
    Cluster(commands::ClusterArgs),
    /// Compute per-item bridging signals (and optional credibility scores).
    Score(commands::ScoreArgs),
    /// Rank candidate items for a viewer under a value model.
    Rank(commands::RankArgs),
    /// Compute relation metrics on a graph (and deltas against a baseline).
    Metrics(commands::MetricsArgs),
    /// Run the agent-based policy simulator.
    Simulate(commands::SimulateArgs),
}

fn main() -> ExitCode {
    // Die quietly when stdout is a closed pipe (e.g. piping into head).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    env_logger::Builder::from_env(env_logger::Env::new().filter("BRIDGERANK_LOG")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Cluster(args) => commands::cluster(args),
        Command::Score(args) => commands::score(args),
        Command::Rank(args) => commands::rank(args),
        Command::Metrics(args) => commands::metrics(args),
        Command::Simulate(args) => commands::simulate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(exit_code_for(&error))
        }
    }
}

/// Maps failures to the exit-code contract: numerical failures are 3,
/// everything else (schema, missing files, bad parameters) is input, 2.
fn exit_code_for(error: &anyhow::Error) -> u8 {
    match error.downcast_ref::<bridgerank_core::Error>() {
        Some(core_error) if core_error.is_numerical() => 3,
        _ => 2,
    }
}
