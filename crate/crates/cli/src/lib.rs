//! Scenario runner for `casimir-core`: configuration parsing, parameter sweeps
//! over every dissipation route, CSV output and route-equivalence reports.

// `!(x > 0.0)` is how domain checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod converge;
pub mod identities;
pub mod scenario;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{parse_config, ConfigErrors, Route, ScenarioConfig};
pub use converge::{convergence_report, ConvergenceTable, Refinement};
pub use scenario::{run_scenario, ScenarioReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigErrors),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: expected two numeric columns `t q`")]
    DriveFile { path: PathBuf, line: usize },

    #[error(transparent)]
    Core(#[from] casimir_core::CasimirError),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("{0}")]
    Usage(String),
}

/// Exit codes: 0 every check passed, 2 some check failed, 1 execution error.
pub mod exit {
    pub const PASS: u8 = 0;
    pub const ERROR: u8 = 1;
    pub const FAIL: u8 = 2;
}
