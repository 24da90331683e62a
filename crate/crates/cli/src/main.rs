use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use qsky_cli::{execute, exit_code, Command, Config};

#[derive(Parser)]
#[command(
    name = "qsky",
    version,
    about = "Skyrmion numbers of noisy hybrid biphoton states"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// TOML run configuration; defaults are used for anything missing.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for Poisson count sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use expected counts instead of Poisson draws.
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Print the density matrix and witnesses of `[state]`.
    State,
    /// One Skyrmion-number computation, with density and texture CSVs.
    Skyrmion,
    /// Noise sweep over `[sweep.p]` or `[sweep.qc]`.
    Sweep,
    /// Textures and N with and without noise for `[gallery] specs`.
    Gallery,
    /// Simulate and reconstruct one tomography record.
    Tomo,
    /// N against grid resolution.
    Converge,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::State => Command::State,
            Sub::Skyrmion => Command::Skyrmion,
            Sub::Sweep => Command::Sweep,
            Sub::Gallery => Command::Gallery,
            Sub::Tomo => Command::Tomo,
            Sub::Converge => Command::Converge,
        }
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
    let mut cfg = match &cli.config {
        Some(path) => match Config::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(1);
            }
        },
        None => Config::default_validated(),
    };
    cfg.apply_overrides(cli.seed, cli.out.clone(), cli.deterministic);
    let outcome = execute(cli.command.into(), &cfg);
    match &outcome {
        Ok(report) => {
            print!("{}", report.stdout);
            for f in &report.files {
                eprintln!("wrote {}", f.display());
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&outcome) as u8)
}
