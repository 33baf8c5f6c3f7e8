//! Pick/place label conversion and temporal aggregation of overlapping action chunks.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{topdown_pixel_to_world, GeometryError, Heightmap, Workspace};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("no action chunk covers step {0}")]
    NoCoveringChunk(u64),
    #[error("chunk issued at {issued_at}: {message}")]
    InvalidChunk { issued_at: u64, message: String },
    #[error("decay rate must be finite, got {0}")]
    InvalidDecay(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PickPlaceLabel {
    pub pick_px: (i64, i64),
    pub place_px: (i64, i64),
    pub pick_world: Vector3<f64>,
    pub place_world: Vector3<f64>,
}

/// Converts top-down pick and place pixels (column, row) into world points.
pub fn label_to_world(
    pick_px: (i64, i64),
    place_px: (i64, i64),
    heightmap: &Heightmap,
    ws: &Workspace,
) -> Result<PickPlaceLabel, PolicyError> {
    Ok(PickPlaceLabel {
        pick_world: topdown_pixel_to_world(pick_px.0, pick_px.1, heightmap, ws)?,
        place_world: topdown_pixel_to_world(place_px.0, place_px.1, heightmap, ws)?,
        pick_px,
        place_px,
    })
}

/// `actions[k]` is the prediction for step `issued_at + k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionChunk {
    pub issued_at: u64,
    pub actions: Vec<Vec<f64>>,
}

impl ActionChunk {
    pub fn new(issued_at: u64, actions: Vec<Vec<f64>>) -> Result<Self, PolicyError> {
        let chunk = Self { issued_at, actions };
        chunk.check()?;
        Ok(chunk)
    }

    pub fn check(&self) -> Result<(), PolicyError> {
        let bad = |message: &str| PolicyError::InvalidChunk { issued_at: self.issued_at, message: message.into() };
        let Some(first) = self.actions.first() else { return Err(bad("no actions")) };
        if self.actions.iter().any(|a| a.len() != first.len()) {
            return Err(bad("action widths differ"));
        }
        Ok(())
    }

    pub fn horizon(&self) -> u64 {
        self.actions.len() as u64
    }

    /// Prediction for step `t`, if this chunk covers it.
    pub fn at(&self, t: u64) -> Option<&[f64]> {
        let k = t.checked_sub(self.issued_at)?;
        self.actions.get(k as usize).map(Vec::as_slice)
    }
}

/// Default decay rate `m`.
pub const DEFAULT_DECAY: f64 = 0.1;

/// Normalized weights `∝ exp(-m·age)` for the given chunk ages.
///
/// Computed relative to the largest exponent so large `|m|` neither overflows nor underflows
/// every weight to zero.
pub fn aggregation_weights(ages: &[u64], m: f64) -> Vec<f64> {
    let logits: Vec<f64> = ages.iter().map(|&k| -m * k as f64).collect();
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|r| r / total).collect()
}

/// Weighted average of every covering chunk's prediction for step `t`.
///
/// A chunk issued at `s` covers `t` when `s ≤ t < s + H`; its weight is proportional to
/// `exp(-m·(t - s))`. Positive `m` favours the most recent prediction, negative `m` the oldest,
/// and `m = 0` is the plain mean.
pub fn temporal_aggregate(chunks: &[ActionChunk], t: u64, m: f64) -> Result<Vec<f64>, PolicyError> {
    if !m.is_finite() {
        return Err(PolicyError::InvalidDecay(m));
    }
    let mut covering = Vec::new();
    for c in chunks {
        c.check()?;
        if let Some(a) = c.at(t) {
            covering.push((t - c.issued_at, a));
        }
    }
    let Some(width) = covering.first().map(|(_, a)| a.len()) else {
        return Err(PolicyError::NoCoveringChunk(t));
    };
    if covering.iter().any(|(_, a)| a.len() != width) {
        return Err(PolicyError::InvalidChunk { issued_at: t, message: "covering chunks differ in width".into() });
    }
    let ages: Vec<u64> = covering.iter().map(|(k, _)| *k).collect();
    let weights = aggregation_weights(&ages, m);
    let mut out = vec![0.0; width];
    for ((_, a), w) in covering.iter().zip(&weights) {
        for (o, v) in out.iter_mut().zip(a.iter()) {
            *o += w * v;
        }
    }
    // Rounding can push a weighted sum a hair outside the hull of equal inputs.
    for (i, o) in out.iter_mut().enumerate() {
        let lo = covering.iter().map(|(_, a)| a[i]).fold(f64::INFINITY, f64::min);
        let hi = covering.iter().map(|(_, a)| a[i]).fold(f64::NEG_INFINITY, f64::max);
        *o = o.clamp(lo, hi);
    }
    Ok(out)
}
