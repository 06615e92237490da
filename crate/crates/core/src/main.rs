use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser};
use netkf::cli::{execute, exit_code_help, Command, ErrorRecord, ExperimentSpec, DEFAULT_EPS};

#[derive(Debug, Parser)]
#[command(name = "netkf", version, about = "Distributed vs. centralized Kalman filtering on coupled networks")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured horizon.
    #[arg(long)]
    horizon: Option<usize>,
    /// Margin factor for the estimate-gap rate, must exceed 1.
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
    /// Override the configured number of Monte-Carlo runs.
    #[arg(long)]
    runs: Option<usize>,
}

fn main() -> ExitCode {
    let matches = Args::command().after_help(exit_code_help()).get_matches();
    let args = Args::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    let spec = ExperimentSpec {
        command: args.command,
        config: args.config,
        out: args.out,
        seed: args.seed,
        horizon: args.horizon,
        eps: args.eps,
        runs: args.runs,
    };
    match execute(&spec) {
        Ok(summary) => {
            for f in &summary.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let rec = ErrorRecord::new(&e);
            eprintln!("{}", rec.to_json());
            ExitCode::from(rec.exit_code as u8)
        }
    }
}
