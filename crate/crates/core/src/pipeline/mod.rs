//! Configuration, seeding, parallel runs, provenance records and dataset statistics.

mod config;
mod record;
mod run;
mod seed;
mod stats;

use thiserror::Error;

pub use config::PipelineConfig;
pub use record::{AugmentationRecord, BackendStamp, ItemFailure, RecordPlan};
pub use run::{
    load_dataset, replay_structured, run_baseline, run_structured, run_structured_with, run_video, run_video_with,
    validate_dataset, Dataset, RunSummary,
};
pub use seed::derive_seed;
pub use stats::{stats, DatasetStats};

use crate::backends::BackendError;
use crate::data::DataError;
use crate::structured::AugmentError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("dataset failed validation ({} problems): {}", .0.len(), .0.first().map_or("", String::as_str))]
    Validation(Vec<String>),
    #[error("{failed} of {total} items failed, over the failure budget; first error: {first}")]
    FailureBudget { failed: usize, total: usize, first: String },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
}
