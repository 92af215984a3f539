//! Seeded experiment runner for the playout forecasters: reads a flat
//! config, plays the trials on a worker pool and writes a transcript, a JSON
//! summary and optionally a regret curve.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod output;
pub mod run;
pub mod spec;

use thiserror::Error;

pub use output::{CurvePoint, Summary};
pub use run::{emit_curve, run, write_outputs, RunOptions, RunOutput};
pub use spec::{ConfigError, ExperimentSpec, Kind};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] playout_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl CliError {
    /// 2 for invariant or protocol violations and failed checks, 3 for
    /// capacity limits, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => core_exit_code(e),
            CliError::Verification(_) => 2,
            _ => 1,
        }
    }
}

fn core_exit_code(e: &playout_core::Error) -> i32 {
    use playout_core::Error as E;
    match e {
        _ if e.is_capacity() => 3,
        E::InvariantViolation(_) | E::ProtocolViolation { .. } => 2,
        E::Erm { source, .. } => core_exit_code(source),
        _ => 1,
    }
}
