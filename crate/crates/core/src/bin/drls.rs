use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use drls::commands::{cmd_bounds, cmd_plan, cmd_simulate, render_bounds, CliError};

#[derive(Parser)]
#[command(name = "drls", version, about = "Distributed online least-squares: plan, simulate, evaluate bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Choose consensus steps T and stopping time S from the config's plan targets.
    Plan {
        config: PathBuf,
        /// JSON result file (default: <config>.plan.json).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the Monte Carlo simulation and write the averaged trace as CSV.
    Simulate {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallel_runs: usize,
    },
    /// Evaluate the local, global and communicated bounds at the given times.
    Bounds {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        at: Vec<u64>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Plan { config, output } => {
            let output = output.unwrap_or_else(|| config.with_extension("plan.json"));
            let report = cmd_plan(&config, &output)?;
            print!("{}", report.summary());
            println!("wrote {}", output.display());
        }
        Command::Simulate {
            config,
            output,
            parallel_runs,
        } => {
            let rows = cmd_simulate(&config, &output, parallel_runs)?;
            println!("wrote {rows} rows to {}", output.display());
        }
        Command::Bounds { config, at } => {
            print!("{}", render_bounds(&cmd_bounds(&config, &at)?));
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
