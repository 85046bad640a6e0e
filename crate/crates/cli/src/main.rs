//! `cdp-sim`: run single scenarios, parameter sweeps and workload generation.
//!
//! Exit codes: 0 on success, 1 for configuration errors, 2 for runtime
//! failures such as I/O errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "cdp-sim",
    version,
    about = "Content discovery in mobile P2P networks, simulated"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and write its metrics.
    Run(RunArgs),
    /// Run every (axis value, protocol, seed) combination and write a CSV table.
    Sweep(SweepArgs),
    /// Generate the synthetic workload and write it as JSON.
    GenWorkload(GenArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// TOML configuration file; missing keys take their defaults.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override any key, e.g. `--set scoring.k=4`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of peers.
    #[arg(long)]
    peers: Option<usize>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory; defaults to a timestamped directory under `runs/`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// cdp, gossiping_lb or flooding.
    #[arg(long)]
    protocol: Option<String>,
    /// Nominal peer speed, m/s.
    #[arg(long)]
    speed: Option<f64>,
    /// Write a JSON-lines message trace.
    #[arg(long)]
    trace: bool,
    /// Write the engine dispatch log.
    #[arg(long)]
    event_log: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory; defaults to a timestamped directory under `runs/`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// peers or speed.
    #[arg(long)]
    axis: String,
    /// Comma-separated protocol names.
    #[arg(long, default_value = "cdp,gossiping_lb")]
    protocols: String,
    /// Seeds per cell, counting up from the master seed.
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output file; defaults to `workload.json` in a timestamped directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Corpus size.
    #[arg(long)]
    docs: Option<usize>,
    /// Number of queries.
    #[arg(long)]
    queries: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(a) => commands::run(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::GenWorkload(a) => commands::gen_workload(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Config(_) => 1,
                CliError::Runtime(_) => 2,
            })
        }
    }
}
