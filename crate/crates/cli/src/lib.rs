//! Command-line front end for the epitaxy solvers.

pub mod config;
pub mod error;
pub mod forcing;
pub mod run;

use std::ffi::OsString;

use clap::{Parser, Subcommand};

use config::{Command, Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "epitaxy", version, about = "Solvers for Δ²u = det(D²u) + λf on rectangles and disks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Picard fixed-point solve
    Solve(Overrides),
    /// Local minimum and mountain-pass solution of the clamped energy
    Mpass(Overrides),
    /// Semi-implicit gradient flow from u = 0
    Evolve(Overrides),
    /// Shooting on the unit disk, optionally with the fold threshold
    Radial(Overrides),
    /// Δ²u = |∇(Δu)|² + λf through the exponential transform
    Kpz(Overrides),
    /// Parallel search for the Picard threshold in [lambda-lo, lambda-hi]
    Sweep(Overrides),
}

impl Sub {
    pub fn split(self) -> (Command, Overrides) {
        match self {
            Sub::Solve(o) => (Command::Solve, o),
            Sub::Mpass(o) => (Command::Mpass, o),
            Sub::Evolve(o) => (Command::Evolve, o),
            Sub::Radial(o) => (Command::Radial, o),
            Sub::Kpz(o) => (Command::Kpz, o),
            Sub::Sweep(o) => (Command::Sweep, o),
        }
    }
}

/// Parses `args` (program name first), runs, and returns the exit code:
/// 0 success, 2 numerical non-convergence, 1 usage or output errors.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let (command, overrides) = cli.command.split();
    let outcome = RunConfig::resolve(command, overrides).and_then(|cfg| run::run(&cfg));
    match outcome {
        Ok(status) => status.exit_code(),
        Err(e) => {
            eprintln!("epitaxy: {e}");
            1
        }
    }
}
