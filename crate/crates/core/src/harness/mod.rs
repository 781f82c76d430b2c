//! Run configuration, scenarios, diagnostics output, checkpoints and the
//! acceptance suite.

mod checkpoint;
mod config;
pub mod output;
mod run;
pub mod scenario;
pub mod suite;
mod validate;

pub use checkpoint::{checkpoint_roundtrip, Checkpoint, RunBook, FORMAT_VERSION, MAGIC};
pub use config::{
    FeneConfig, ForcingConfig, GeometryConfig, InitialConfig, OutputConfig, PrescribedConfig, RunConfig, Scenario,
    Tolerances, PRESETS,
};
pub use output::{read_csv, Row, RunStats, Status, Summary, CSV_HEADER};
pub use run::{checkpoint_path, resume, run, RunOutcome, CHECKPOINT_DIR, CSV_FILE, DUMP_DIR, SUMMARY_FILE};
pub use validate::{validate_dataset, Check, ValidationReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
