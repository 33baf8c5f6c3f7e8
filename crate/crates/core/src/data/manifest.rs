use std::path::Path;

use serde::{Deserialize, Serialize};

use super::io::episode_dir;
use super::{io_err, DataError, SCHEMA_VERSION};
use crate::pipeline::AugmentationRecord;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeEntry {
    pub id: String,
    pub frames: usize,
}

/// `manifest.json` at the dataset root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub dataset_id: String,
    pub schema_version: u32,
    pub episodes: Vec<EpisodeEntry>,
    #[serde(default)]
    pub records: Vec<AugmentationRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<crate::pipeline::ItemFailure>,
}

impl DatasetManifest {
    pub fn new(dataset_id: impl Into<String>) -> Self {
        Self { dataset_id: dataset_id.into(), schema_version: SCHEMA_VERSION, episodes: Vec::new(), records: Vec::new(), failures: Vec::new() }
    }

    pub fn total_frames(&self) -> usize {
        self.episodes.iter().map(|e| e.frames).sum()
    }

    /// Checks that each listed episode exists under `root` with the listed frame count.
    pub fn verify(&self, root: &Path) -> Vec<String> {
        #[derive(Deserialize)]
        struct FrameCount {
            frames: Vec<serde::de::IgnoredAny>,
        }
        let mut problems = Vec::new();
        for e in &self.episodes {
            let meta = episode_dir(root, &e.id).join("meta.json");
            match std::fs::read_to_string(&meta) {
                Err(_) => problems.push(format!("episode {} listed but {} is missing", e.id, meta.display())),
                Ok(text) => match serde_json::from_str::<FrameCount>(&text) {
                    Ok(fc) if fc.frames.len() == e.frames => {}
                    Ok(fc) => problems.push(format!(
                        "episode {} lists {} frames, stored {}",
                        e.id,
                        e.frames,
                        fc.frames.len()
                    )),
                    Err(err) => problems.push(format!("episode {}: {err}", e.id)),
                },
            }
        }
        problems
    }
}

pub fn load_manifest(root: &Path) -> Result<DatasetManifest, DataError> {
    let path = root.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    let m: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| DataError::Json { path: path.clone(), message: e.to_string() })?;
    if m.schema_version != SCHEMA_VERSION {
        return Err(DataError::UnsupportedSchema(m.schema_version));
    }
    Ok(m)
}

pub fn save_manifest(root: &Path, manifest: &DatasetManifest) -> Result<(), DataError> {
    std::fs::create_dir_all(root).map_err(io_err(root))?;
    let path = root.join("manifest.json");
    let json = serde_json::to_string_pretty(manifest).expect("manifest serialises");
    std::fs::write(&path, json).map_err(io_err(&path))
}
