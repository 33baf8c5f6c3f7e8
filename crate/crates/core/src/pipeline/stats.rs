use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::RecordPlan;
use super::PipelineError;
use crate::data::{load_episode, load_manifest, Episode};
use crate::structured::Component;

/// Summary of a dataset and the provenance records in its manifest.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub episodes: usize,
    pub frames: usize,
    pub records: usize,
    pub failures: usize,
    /// Mean object/receptacle mask coverage over episodes that carry the mask.
    pub object_mask_coverage: Option<f64>,
    pub receptacle_mask_coverage: Option<f64>,
    /// Object and receptacle labels with their episode counts.
    pub labels: BTreeMap<String, usize>,
    /// Fraction of structured/video records whose plan includes each component.
    pub component_frequencies: BTreeMap<String, f64>,
    /// `<episode>: <warning>` for every warning and tracking event in the records.
    pub warnings: Vec<String>,
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

pub fn stats(root: &Path) -> Result<DatasetStats, PipelineError> {
    let manifest = load_manifest(root)?;
    let episodes: Vec<Episode> = manifest
        .episodes
        .par_iter()
        .map(|e| load_episode(root, &e.id))
        .collect::<Result<_, _>>()?;
    let mut s = DatasetStats {
        episodes: episodes.len(),
        frames: episodes.iter().map(|e| e.frames.len()).sum(),
        records: manifest.records.len(),
        failures: manifest.failures.len(),
        ..Default::default()
    };
    let coverage = |f: fn(&Episode) -> Option<&crate::data::Mask>| {
        mean(&episodes.iter().filter_map(|e| f(e).map(|m| m.coverage())).collect::<Vec<_>>())
    };
    s.object_mask_coverage = coverage(|e| e.object_mask.as_ref());
    s.receptacle_mask_coverage = coverage(|e| e.receptacle_mask.as_ref());
    for e in &episodes {
        for label in [&e.object_label, &e.receptacle_label] {
            if !label.is_empty() {
                *s.labels.entry(label.clone()).or_default() += 1;
            }
        }
    }
    let mut counts: BTreeMap<Component, usize> = BTreeMap::new();
    let mut planned = 0usize;
    for r in &manifest.records {
        let components = match &r.plan {
            RecordPlan::Structured(p) => Some(&p.components),
            RecordPlan::Video(p) => Some(&p.components),
            RecordPlan::Baseline { .. } => None,
        };
        if let Some(cs) = components {
            planned += 1;
            for c in cs {
                *counts.entry(*c).or_default() += 1;
            }
        }
        s.warnings.extend(r.warnings.iter().map(|w| format!("{}: {w}", r.output_episode)));
        s.warnings.extend(r.events.iter().map(|ev| {
            format!("{}: {}", r.output_episode, serde_json::to_string(ev).expect("event serialises"))
        }));
    }
    for f in &manifest.failures {
        s.warnings.push(format!("{} aug {}: failed: {}", f.source_episode, f.aug_index, f.error));
    }
    if planned > 0 {
        for c in Component::ALL {
            let n = counts.get(&c).copied().unwrap_or(0);
            s.component_frequencies.insert(c.name().to_string(), n as f64 / planned as f64);
        }
    }
    Ok(s)
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "episodes: {}", self.episodes)?;
        writeln!(f, "frames: {}", self.frames)?;
        writeln!(f, "records: {} ({} failed items)", self.records, self.failures)?;
        let pct = |c: Option<f64>| c.map_or("-".to_string(), |v| format!("{:.2}%", 100.0 * v));
        writeln!(f, "object mask coverage: {}", pct(self.object_mask_coverage))?;
        writeln!(f, "receptacle mask coverage: {}", pct(self.receptacle_mask_coverage))?;
        if !self.labels.is_empty() {
            writeln!(f, "labels:")?;
            for (l, n) in &self.labels {
                writeln!(f, "  {l}: {n}")?;
            }
        }
        if !self.component_frequencies.is_empty() {
            writeln!(f, "component frequencies:")?;
            for (c, p) in &self.component_frequencies {
                writeln!(f, "  {c}: {p:.3}")?;
            }
        }
        if !self.warnings.is_empty() {
            writeln!(f, "warnings ({}):", self.warnings.len())?;
            for w in &self.warnings {
                writeln!(f, "  {w}")?;
            }
        }
        Ok(())
    }
}
