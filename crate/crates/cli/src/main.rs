use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stringmass_cli::{execute, CliError, Command, RunConfig};

const MAX_WARNINGS: usize = 3;

#[derive(Parser)]
#[command(
    name = "stringmass",
    version,
    about = "String with two boundary particles: calibration, spectrum, dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Solve the atom weights and couplings.
    Calibrate,
    /// Eigenvalue table.
    Spectrum,
    /// Sampled basis functions and orthonormality certificate.
    Modes,
    /// Mode-expansion time evolution.
    Evolve,
    /// Boundary-indicator factorization diagnostic.
    Fock,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Calibrate => Command::Calibrate,
            Cmd::Spectrum => Command::Spectrum,
            Cmd::Modes => Command::Modes,
            Cmd::Evolve => Command::Evolve,
            Cmd::Fock => Command::Fock,
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("STRINGMASS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        CliError::Config(format!(
            "STRINGMASS_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let path = cli
        .config
        .ok_or_else(|| CliError::Config("--config <FILE> is required".into()))?;
    let mut cfg = RunConfig::load(&path)?;
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let outputs = execute(cli.command.into(), &cfg)?;
    for note in outputs.notes.iter().take(MAX_WARNINGS) {
        eprintln!("warning: {note}");
    }
    if outputs.notes.len() > MAX_WARNINGS {
        eprintln!(
            "warning: ... and {} more",
            outputs.notes.len() - MAX_WARNINGS
        );
    }
    for path in outputs.write(&cfg.output_dir)? {
        println!("{}", path.display());
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
