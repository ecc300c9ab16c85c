use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod heat_cmd;
mod io;
mod rng_cmd;

/// Reversible random numbers and adjoint Monte Carlo for the heat-control problem.
#[derive(Parser, Debug)]
#[command(name = "revmc", version)]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generator checks, benchmarks and raw output.
    Rng {
        #[command(subcommand)]
        command: rng_cmd::RngCommand,
    },
    /// Simulation, gradient and optimization runs.
    Heat {
        #[command(subcommand)]
        command: heat_cmd::HeatCommand,
    },
    /// Gradient timing and path memory for stored vs reversible sweeps.
    BenchScaling(heat_cmd::ScalingArgs),
}

/// Simulation settings shared by the heat commands.
#[derive(Args, Debug, Clone)]
pub struct SimArgs {
    /// INI-style `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from the small desk-scale settings instead of the full-size defaults.
    #[arg(long)]
    desk: bool,
    /// Overrides the particle count.
    #[arg(long)]
    particles: Option<usize>,
    /// Overrides the base seed.
    #[arg(long)]
    seed: Option<u64>,
}

/// Failure classes, mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    /// A check ran and did not pass.
    Verification(String),
    /// Bad arguments or configuration.
    Usage(String),
    /// I/O or resource failure.
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification(_) | Failure::Runtime(_) => 1,
            Failure::Usage(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verification(m) | Failure::Usage(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<revmc::heat::HeatError> for Failure {
    fn from(e: revmc::heat::HeatError) -> Self {
        use revmc::heat::HeatError as E;
        match e {
            E::PathBudgetExceeded { .. } | E::AllocationFailed { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<revmc::optimize::OptimizeError> for Failure {
    fn from(e: revmc::optimize::OptimizeError) -> Self {
        use revmc::optimize::OptimizeError as E;
        match e {
            E::Heat(h) => h.into(),
            E::InvalidConfig(m) => Failure::Usage(m),
            E::NoDescent { .. } => Failure::Verification(e.to_string()),
        }
    }
}

/// Writes one `key=value` line to the stats channel (stderr).
pub fn stat(key: &str, value: impl std::fmt::Display) {
    eprintln!("{key}={value}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Rng { command } => rng_cmd::run(command),
        Command::Heat { command } => heat_cmd::run(command),
        Command::BenchScaling(args) => heat_cmd::bench_scaling(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message().is_empty() {
                eprintln!("error: {}", f.message());
            }
            ExitCode::from(f.code())
        }
    }
}
