mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Primal-dual gradient flows with switched inequality multipliers, and
/// numerical checks of their passivity and stability certificates.
#[derive(Parser, Debug)]
#[command(name = "pdflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a scenario; writes trajectory, ledger, storage trace and manifest
    Simulate(RunArgs),
    /// Check every applicable certificate over a simulate output directory
    Verify {
        /// Directory written by `simulate`
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a quadratic scenario by active-set enumeration
    Oracle {
        #[arg(long)]
        scenario: PathBuf,
        /// Where to write oracle.json (default: the scenario's output directory)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a building scenario over one day of time-of-use prices
    HvacDay(RunArgs),
    /// Randomised oracle-equivalence and certificate checks
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random programs
        #[arg(long, default_value_t = 50)]
        count: usize,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory (default: the scenario's `outputs.directory`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the simulated horizon (per price interval for `hvac-day`)
    #[arg(long)]
    horizon: Option<f64>,
    /// Override the maximum step
    #[arg(long)]
    dt_max: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a.scenario, a.out, a.horizon, a.dt_max),
        Command::Verify { out } => commands::verify(&out),
        Command::Oracle { scenario, out } => commands::oracle(&scenario, out),
        Command::HvacDay(a) => commands::hvac_day(&a.scenario, a.out, a.horizon, a.dt_max),
        Command::Selftest { seed, count } => commands::selftest(seed, count),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
