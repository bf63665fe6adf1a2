//! Batch experiments for the spiked Wigner laboratory.
//!
//! An experiment is described by an [`ExperimentConfig`], run by
//! [`run_experiment`] and summarised in a [`RunSummary`] written as JSON next
//! to per-trial CSV files.

pub mod config;
pub mod experiments;
pub mod summary;

pub use config::{AmpInitKind, ExperimentConfig, ExperimentKind, Grid, StartKind};
pub use experiments::run_experiment;
pub use summary::{RunSummary, TrialRecord, SUMMARY_SCHEMA};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("input error: {0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl HarnessError {
    /// Process exit code: 2 for bad input, 3 for internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Input(_) => 2,
            HarnessError::Internal(_) => 3,
        }
    }
}

impl From<swlab_core::Error> for HarnessError {
    fn from(e: swlab_core::Error) -> Self {
        use swlab_core::Error as E;
        match e {
            E::Input(_) | E::Domain(_) | E::Dimension { .. } => HarnessError::Input(e.to_string()),
            _ => HarnessError::Internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Internal(e.to_string())
    }
}
