//! Command-line front end for `ralm-core`: configuration files, training,
//! evaluation and artifact export.
//!
//! Exit codes: 0 success, 2 bad configuration or usage, 3 training aborted.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

use clap::{Parser, Subcommand};

pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "ralm", version, about = "Train and evaluate reinforcement-learned ALM fuzzy controllers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a controller and write the model directory.
    Train(commands::TrainArgs),
    /// Roll a trained controller out from a set of start states.
    Eval(commands::EvalArgs),
    /// Re-export rules, planes or the critic from a model directory.
    Export(commands::ExportArgs),
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train(a) => {
            let out = commands::train(a)?;
            println!("model written to {}", out.display());
        }
        Command::Eval(a) => {
            let s = commands::eval(a)?;
            let rise = s.metrics.rise_time.map(|t| format!("{t:.3} s")).unwrap_or_else(|| "none".into());
            println!(
                "success {}/{} ({:.1}%), mean rise time {rise}, max overshoot {:.2}%; written to {}",
                s.metrics.success_count,
                s.metrics.episodes,
                100.0 * s.success_rate,
                s.metrics.overshoot,
                s.out.display()
            );
        }
        Command::Export(a) => {
            for p in commands::export(a)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}
