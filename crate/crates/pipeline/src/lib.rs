//! Staged, resumable dataset and evaluation pipeline.
//!
//! Stages communicate only through files under one output root and the
//! `manifest.json` that records them with their SHA-256 hashes:
//!
//! `gen-scenes → split → simulate → extract-params → make-labels →
//! make-features → baseline → evaluate → plot`, plus the standalone
//! `export-golden`.
//!
//! Rerunning a stage whose inputs did not change is a no-op; changing a
//! stage's inputs drops everything downstream of it.

pub mod config;
pub mod error;
pub mod plot;
pub mod run;
pub mod stage;
pub mod store;

mod stages;

pub use config::PipelineConfig;
pub use error::{PipelineError, Result};
pub use run::{Pipeline, StageOutcome, WORKERS_ENV};
pub use stage::Stage;
pub use stages::evaluate::{check_bounds, TABLE_FILE};
pub use stages::golden::GoldenLoss;
pub use stages::labels::NORMALIZER_FILE;
pub use stages::simulate::effective_sim_config;
