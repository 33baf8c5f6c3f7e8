use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::backends::BackendDescriptors;
use crate::geometry::Workspace;
use crate::structured::{BaselineOptions, ComponentProbabilities, PlanSettings, PromptGrammar};

/// Run configuration, read from a single JSON document. Every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(flatten)]
    pub probabilities: ComponentProbabilities,
    pub max_distractors: u32,
    /// Augmented copies per source episode (per trajectory in the video regime).
    pub num_augmentations: u32,
    pub grammar: PromptGrammar,
    pub background_noun: String,
    pub workspace: Workspace,
    /// Relative paths resolve against the input dataset root.
    pub mesh_catalog: PathBuf,
    pub backends: BackendDescriptors,
    pub workers: usize,
    pub global_seed: u64,
    /// Copy source episodes into the output alongside their augmentations.
    pub include_originals: bool,
    /// Fraction of failed items above which a run fails.
    pub failure_budget: f64,
    pub baseline: BaselineOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let plan = PlanSettings::default();
        Self {
            probabilities: plan.probabilities,
            max_distractors: plan.max_distractors,
            num_augmentations: 1,
            grammar: plan.grammar,
            background_noun: plan.background_noun,
            workspace: Workspace { x_range: [-0.4, 0.4], y_range: [-0.4, 0.4], table_height: 0.0, topdown_resolution: 0.01 },
            mesh_catalog: PathBuf::from("meshes/catalog.json"),
            backends: BackendDescriptors::default(),
            workers: 1,
            global_seed: 0,
            include_originals: false,
            failure_budget: 0.10,
            baseline: BaselineOptions::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            PipelineError::Config(m) => PipelineError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn check(&self) -> Result<(), PipelineError> {
        let cfg = |m: String| PipelineError::Config(m);
        self.plan_settings().probabilities.check().map_err(|e| cfg(e.to_string()))?;
        self.grammar.check().map_err(|e| cfg(e.to_string()))?;
        self.workspace.check().map_err(|e| cfg(e.to_string()))?;
        if self.num_augmentations < 1 {
            return Err(cfg("num_augmentations must be at least 1".into()));
        }
        if self.workers < 1 {
            return Err(cfg("workers must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.failure_budget) {
            return Err(cfg("failure_budget must lie in [0, 1]".into()));
        }
        for d in [&self.backends.inpaint, &self.backends.segment, &self.backends.track] {
            d.check().map_err(|e| cfg(e.to_string()))?;
        }
        Ok(())
    }

    pub fn plan_settings(&self) -> PlanSettings {
        PlanSettings {
            probabilities: self.probabilities,
            max_distractors: self.max_distractors,
            grammar: self.grammar.clone(),
            background_noun: self.background_noun.clone(),
        }
    }

    pub fn catalog_path(&self, dataset_root: &Path) -> PathBuf {
        if self.mesh_catalog.is_absolute() {
            self.mesh_catalog.clone()
        } else {
            dataset_root.join(&self.mesh_catalog)
        }
    }
}
