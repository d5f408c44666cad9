//! `xxzctl`: pulse optimization, controllability checks and robustness sweeps
//! for XXZ spin chains controlled through the first spin.

mod commands;
mod manifest;
mod replay;

use std::process::ExitCode;

use clap::{error::ErrorKind, Parser, Subcommand};

use commands::{LadderArgs, LiedimArgs, OptimizeArgs, RisetimeArgs, RobustnessArgs, ScanArgs};
use replay::ReplayArgs;

/// Environment variable naming the directory for outputs without an explicit `--out`.
pub const OUTPUT_DIR_ENV: &str = "XXZ_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "xxzctl",
    version,
    about = "Local quantum control of anisotropic XXZ spin chains"
)]
struct Cli {
    /// Worker threads for restarts and samples (results do not depend on it)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log progress to stderr
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maximize a gate fidelity over piecewise-constant pulse amplitudes
    Optimize(OptimizeArgs),
    /// Dimension of the dynamical Lie algebra and reachability checks
    Liedim(LiedimArgs),
    /// Minimal gate time over a t_f grid, for each anisotropy
    Scan(ScanArgs),
    /// Fidelity under uniform amplitude noise for a stored sequence
    Robustness(RobustnessArgs),
    /// Fidelity of a stored sequence under finite field rise time
    Risetime(RisetimeArgs),
    /// Best fidelity versus pulse count at fixed total time
    Ladder(LadderArgs),
    /// Re-run a command from a manifest or a JSON config file
    Replay(ReplayArgs),
}

/// Outcome of a successful command.
pub enum Status {
    Ok,
    BelowThreshold,
}

pub fn run_command(command: &Command) -> anyhow::Result<Status> {
    match command {
        Command::Optimize(a) => commands::optimize(a),
        Command::Liedim(a) => commands::liedim(a),
        Command::Scan(a) => commands::scan(a),
        Command::Robustness(a) => commands::robustness(a),
        Command::Risetime(a) => commands::risetime(a),
        Command::Ladder(a) => commands::ladder(a),
        Command::Replay(a) => replay::replay(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };

    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }

    match run_command(&cli.command) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::BelowThreshold) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
