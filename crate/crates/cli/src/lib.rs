//! Experiment runner for `qsky`: noise sweeps, topology galleries,
//! convergence scans and simulated tomography, configured from a TOML file
//! and written out as CSV.

pub mod config;
pub mod error;
pub mod output;
pub mod runners;

pub use config::Config;
pub use error::{CliError, Result, Warning};
pub use runners::{
    execute, run_convergence, run_sweep, run_tomo, run_topology_gallery, Command, Report,
};

/// Process exit status for a finished run.
pub fn exit_code(outcome: &Result<Report>) -> i32 {
    match outcome {
        Ok(r) if r.warnings.is_empty() => 0,
        Ok(_) => 2,
        Err(_) => 1,
    }
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
