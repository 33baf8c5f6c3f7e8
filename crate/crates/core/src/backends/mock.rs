use std::collections::HashMap;

use super::{
    BackendError, BackendInfo, BackendService, InpaintMode, InpaintRequest, ScoredMask, SegmentRequest,
    TrackReply, TrackRequest,
};
use crate::data::{Image, Mask};
use crate::fnv1a64;

/// Below this IoU the mock tracker reports a fallback and returns the previous mask.
pub const TRACK_IOU_FLOOR: f64 = 0.1;

const STIPPLE_DARKEN: u8 = 32;

/// Deterministic procedural stand-in for the generative services.
///
/// - inpaint: masked pixels take a flat color derived from the prompt and seed, darkened on a
///   checkerboard stipple; depth-guided requests also dim farther pixels.
/// - segment: 4-connected components of pixels that differ from the most frequent color.
/// - track: the component of the next image with the best IoU against the previous mask.
#[derive(Clone, Copy, Debug, Default)]
pub struct MockBackend;

/// Flat fill color for `(prompt, seed)`: the low three bytes of `FNV-1a-64(prompt) ^ seed`.
pub fn mock_fill_color(prompt: &str, seed: u64) -> [u8; 3] {
    let b = (fnv1a64(prompt.as_bytes()) ^ seed).to_le_bytes();
    [b[0], b[1], b[2]]
}

fn background_color(image: &Image) -> [u8; 3] {
    let mut counts: HashMap<[u8; 3], usize> = HashMap::new();
    for i in 0..image.pixel_count() {
        *counts.entry(image.at(i)).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|(ca, na), (cb, nb)| na.cmp(nb).then_with(|| cb.cmp(ca)))
        .map(|(c, _)| c)
        .expect("images are never empty")
}

/// 4-connected components of non-background pixels, in raster order of their first pixel.
pub fn color_components(image: &Image) -> Vec<Mask> {
    let bg = background_color(image);
    let (w, h) = (image.width() as usize, image.height() as usize);
    let mut label = vec![usize::MAX; w * h];
    let mut comps = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if label[start] != usize::MAX || image.at(start) == bg {
            continue;
        }
        let id = comps.len();
        let mut mask = Mask::empty(w as u32, h as u32);
        label[start] = id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            mask.put(i, true);
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if label[j] == usize::MAX && image.at(j) != bg {
                    label[j] = id;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        comps.push(mask);
    }
    comps
}

impl BackendService for MockBackend {
    fn health(&self) -> Result<BackendInfo, BackendError> {
        Ok(BackendInfo {
            name: "mock".into(),
            version: crate::ENGINE_VERSION.into(),
            modes: vec!["inpaint".into(), "depth_guided".into(), "segment".into(), "track".into()],
            deterministic: Some(true),
        })
    }

    fn inpaint(&self, req: &InpaintRequest) -> Result<Image, BackendError> {
        req.check()?;
        let base = mock_fill_color(&req.prompt, req.seed);
        let w = req.image.width() as usize;
        let depth = match req.mode {
            InpaintMode::DepthGuided => req.depth.as_ref(),
            InpaintMode::Inpaint => None,
        };
        // Depth range over valid masked pixels, for normalisation.
        let range = depth.and_then(|d| {
            let vals = d.values();
            let mut it = (0..vals.len()).filter(|&i| req.mask.at(i) && vals[i] > 0.0).map(|i| vals[i] as f64);
            let first = it.next()?;
            Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
        });
        let mut out = req.image.clone();
        for i in 0..out.pixel_count() {
            if !req.mask.at(i) {
                continue;
            }
            let mut rgb = base;
            if let (Some(d), Some((lo, hi))) = (depth, range) {
                let v = d.values()[i] as f64;
                if v > 0.0 {
                    let n = if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
                    let scale = 1.0 - 0.5 * n;
                    rgb = rgb.map(|c| (c as f64 * scale).round() as u8);
                }
            }
            if ((i % w) + (i / w)) % 2 == 0 {
                rgb = rgb.map(|c| c.saturating_sub(STIPPLE_DARKEN));
            }
            out.put(i, rgb);
        }
        Ok(out)
    }

    fn segment(&self, req: &SegmentRequest) -> Result<Vec<ScoredMask>, BackendError> {
        req.check()?;
        let comps = color_components(&req.image);
        if let Some((x, y)) = req.point {
            return Ok(comps
                .into_iter()
                .find(|m| m.get(x, y))
                .map(|mask| ScoredMask { mask, score: 1.0 })
                .into_iter()
                .collect());
        }
        let total = req.image.pixel_count() as f64;
        let mut scored: Vec<ScoredMask> = comps
            .into_iter()
            .map(|mask| {
                let score = mask.count() as f64 / total;
                ScoredMask { mask, score }
            })
            .collect();
        scored.sort_by(|a, b| b.score.total_cmp(&a.score));
        Ok(scored)
    }

    fn track(&self, req: &TrackRequest) -> Result<TrackReply, BackendError> {
        req.check()?;
        let best = color_components(&req.next_image)
            .into_iter()
            .map(|m| (req.prev_mask.iou(&m), m))
            .fold(None::<(f64, Mask)>, |best, (iou, m)| match best {
                Some((b, _)) if b >= iou => best,
                _ => Some((iou, m)),
            });
        Ok(match best {
            Some((iou, mask)) if iou >= TRACK_IOU_FLOOR => TrackReply { mask, fallback: false },
            _ => TrackReply { mask: req.prev_mask.clone(), fallback: true },
        })
    }
}
