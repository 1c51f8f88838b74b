//! Declarative experiment runner behind the `opd-unravel` binary.
//!
//! | exit code | meaning |
//! |---|---|
//! | 0 | success |
//! | 1 | any other failure (I/O, numerical breakdown) |
//! | 2 | invalid configuration or state |
//! | 3 | method inapplicable (negative rate for MCWF, RO or QSD) |
//! | 4 | NMQJ reverse-jump failure |
//! | 5 | decomposition failure |
//! | 6 | positive rate-operator unraveling failure |
//! | 7 | oracle dimension cap exceeded |
//! | 8 | comparison flagged a time, or the domain scan disagreed with the closed form |

pub mod commands;
pub mod config;
pub mod model;
pub mod table;

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub use commands::{cmd_compare, cmd_decompose, cmd_domain, cmd_exact, cmd_simulate};
pub use config::ExperimentConfig;
pub use table::{ResultTable, Row};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_METHOD_INAPPLICABLE: i32 = 3;
pub const EXIT_REVERSE_JUMP: i32 = 4;
pub const EXIT_DECOMPOSITION: i32 = 5;
pub const EXIT_POSITIVE_UNRAVELING: i32 = 6;
pub const EXIT_ORACLE_CAP: i32 = 7;
pub const EXIT_COMPARE_FAILED: i32 = 8;

pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Config(_) | Error::InvalidState(_) | Error::DimensionMismatch(_) | Error::StepTooLarge { .. } => EXIT_CONFIG,
        Error::MethodInapplicable { .. } => EXIT_METHOD_INAPPLICABLE,
        Error::ReverseJumpFailure { .. } => EXIT_REVERSE_JUMP,
        Error::Decomposition { .. } | Error::SingularFrame { .. } | Error::VanishingRepreparation { .. } => EXIT_DECOMPOSITION,
        Error::PositiveUnravelingFailure { .. } => EXIT_POSITIVE_UNRAVELING,
        Error::OracleCap { .. } => EXIT_ORACLE_CAP,
        _ => EXIT_OTHER,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Decompose,
    Simulate,
    Exact,
    Compare,
    Domain,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Runs one command and writes its files into `out`. Returns the exit code.
pub fn run(command: Command, cfg: &ExperimentConfig, out: &Path) -> Result<i32> {
    std::fs::create_dir_all(out)?;
    match command {
        Command::Decompose => {
            let r = cmd_decompose(cfg)?;
            write_json(&out.join("decompose.json"), &r)?;
            log::info!("{} branches, reconstruction residual {:.3e}", r.branches.len(), r.reconstruction_residual);
        }
        Command::Simulate => {
            let r = cmd_simulate(cfg)?;
            r.table.save_csv(&out.join("simulate.csv"))?;
            write_json(&out.join("simulate.json"), &r.report)?;
            log::info!("{} rows, {} distinct generators", r.table.rows.len(), r.report.distinct_generators);
        }
        Command::Exact => {
            let r = cmd_exact(cfg)?;
            r.table.save_csv(&out.join("exact.csv"))?;
            write_json(&out.join("exact.json"), &r.report)?;
        }
        Command::Compare => {
            let r = cmd_compare(cfg)?;
            r.simulation.table.save_csv(&out.join("simulate.csv"))?;
            write_json(&out.join("compare.json"), &r.report)?;
            log::info!("{} of {} entries flagged", r.report.flagged, r.report.entries.len());
            if !r.report.pass {
                return Ok(EXIT_COMPARE_FAILED);
            }
        }
        Command::Domain => {
            let r = cmd_domain(cfg)?;
            write_json(&out.join("domain.json"), &r)?;
            if !r.all_agree {
                return Ok(EXIT_COMPARE_FAILED);
            }
        }
    }
    Ok(EXIT_OK)
}
