use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::structured::{AugmentationPlan, BaselineMode};
use crate::video::{VideoPlan, ViewEvent};

/// What was applied to produce one output episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum RecordPlan {
    Structured(AugmentationPlan),
    Video(VideoPlan),
    Baseline { mode: BaselineMode, seed: u64 },
}

/// Name and version a service reported from its health endpoint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendStamp {
    pub role: String,
    pub name: String,
    pub version: String,
}

/// Provenance of one augmented episode; enough to regenerate it with the same backend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentationRecord {
    pub output_episode: String,
    pub source_episode: String,
    pub aug_index: u64,
    pub global_seed: u64,
    pub plan: RecordPlan,
    pub backends: Vec<BackendStamp>,
    pub seeds: BTreeMap<String, u64>,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub events: Vec<ViewEvent>,
    pub engine_version: String,
}

/// An item that failed and was skipped.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemFailure {
    pub source_episode: String,
    pub aug_index: u64,
    pub error: String,
}
