//! Scenario-driven command line front end for `qsymplectic`.
//!
//! Operators are written as Pauli strings (`"0.5*X0 + 0.5*X1"`) or loaded
//! from dense matrix files (`"file:h.txt"`); a JSON scenario fixes the
//! operator, initial state, integrator, seed and tolerances. Each command
//! writes a JSON report echoing the resolved scenario.

use std::path::PathBuf;

pub mod commands;
pub mod expr;
pub mod matrix_file;
pub mod report;
pub mod scenario;

pub use commands::{run, Command, Outcome};
pub use expr::{parse_operator_expr, OperatorExpr, ParseError};
pub use scenario::{load_scenario, parse_scenario, Overrides, Scenario, Setup};

/// Exit status for configuration and usage problems.
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] qsymplectic::Error),
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
