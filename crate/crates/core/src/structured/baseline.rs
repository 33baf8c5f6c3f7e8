//! Non-generative comparison augmenters: random copy-paste, random background, pasted
//! distractors and SE(2) jitter of the object crop. All of them edit RGB only.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::prompt::seeded_index;
use super::AugmentError;
use crate::data::{decode_mask_png, decode_rgb_png, DataError, Frame, Image, Mask};
use crate::geometry::{bboxes_overlap, Rect};
use crate::{mix64, sub_seed, unit_f64};

use super::distractors::DISTRACTOR_RETRIES;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMode {
    CopyPaste,
    RandomBackground,
    RandomDistractors,
    Spatial,
}

impl std::str::FromStr for BaselineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "copy_paste" => Ok(Self::CopyPaste),
            "random_background" => Ok(Self::RandomBackground),
            "random_distractors" => Ok(Self::RandomDistractors),
            "spatial" => Ok(Self::Spatial),
            other => Err(format!("unknown baseline mode {other:?}")),
        }
    }
}

/// Segmented image patch; `mask` is the paste alpha.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub name: String,
    pub rgb: Image,
    pub mask: Mask,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineOptions {
    /// Patches pasted by the copy-paste and distractor modes.
    pub paste_count: u32,
    pub max_translation_px: f64,
    pub max_rotation_rad: f64,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        Self { paste_count: 1, max_translation_px: 10.0, max_rotation_rad: 0.5 }
    }
}

/// Scene annotations the baselines respect.
#[derive(Clone, Debug)]
pub struct BaselineMasks {
    pub object: Mask,
    pub receptacle: Mask,
}

impl BaselineMasks {
    fn protected(&self) -> Mask {
        self.object.union(&self.receptacle)
    }
}

/// Loads `*.rgb.png` + `*.mask.png` pairs from `dir`, sorted by name.
pub fn load_patch_library(dir: &Path) -> Result<Vec<Patch>, DataError> {
    let entries = std::fs::read_dir(dir).map_err(crate::data::io_err(dir))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().to_str().and_then(|n| n.strip_suffix(".rgb.png")).map(String::from))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|name| {
            let rgb_path = dir.join(format!("{name}.rgb.png"));
            let mask_path = dir.join(format!("{name}.mask.png"));
            let rgb_bytes = std::fs::read(&rgb_path).map_err(crate::data::io_err(&rgb_path))?;
            let mask_bytes = std::fs::read(&mask_path).map_err(crate::data::io_err(&mask_path))?;
            let rgb = decode_rgb_png(&rgb_bytes).map_err(|message| DataError::CorruptImage { path: rgb_path, message })?;
            let mask = decode_mask_png(&mask_bytes).map_err(|message| DataError::CorruptImage { path: mask_path, message })?;
            if rgb.dims() != mask.dims() {
                return Err(DataError::DimensionMismatch { what: format!("patch {name}"), expected: rgb.dims(), found: mask.dims() });
            }
            Ok(Patch { name, rgb, mask })
        })
        .collect()
}

fn paste(image: &mut Image, patch: &Patch, x0: u32, y0: u32) {
    for y in 0..patch.rgb.height() {
        for x in 0..patch.rgb.width() {
            if patch.mask.get(x, y) {
                image.set_pixel(x0 + x, y0 + y, patch.rgb.pixel(x, y));
            }
        }
    }
}

/// Seeded top-left corner keeping `patch` inside the image, or `None` if it cannot fit.
fn seeded_corner(image: &Image, patch: &Patch, seed: u64) -> Option<(u32, u32)> {
    let (w, h) = image.dims();
    let (pw, ph) = patch.rgb.dims();
    if pw > w || ph > h {
        return None;
    }
    let x = (mix64(sub_seed(seed, "x")) % (w - pw + 1) as u64) as u32;
    let y = (mix64(sub_seed(seed, "y")) % (h - ph + 1) as u64) as u32;
    Some((x, y))
}

fn resize_nearest(src: &Image, w: u32, h: u32) -> Image {
    Image::from_fn(w, h, |x, y| {
        let sx = (x as u64 * src.width() as u64 / w as u64) as u32;
        let sy = (y as u64 * src.height() as u64 / h as u64) as u32;
        src.pixel(sx, sy)
    })
}

/// RGB analogue of depth backfill: mean of the nearest non-region pixels along row and column.
fn fill_from_neighbors(image: &Image, region: &Mask) -> Image {
    let (w, h) = image.dims();
    let mut out = image.clone();
    for y in 0..h {
        for x in 0..w {
            if !region.get(x, y) {
                continue;
            }
            let found = [
                (0..x).rev().find(|&xx| !region.get(xx, y)).map(|xx| image.pixel(xx, y)),
                (x + 1..w).find(|&xx| !region.get(xx, y)).map(|xx| image.pixel(xx, y)),
                (0..y).rev().find(|&yy| !region.get(x, yy)).map(|yy| image.pixel(x, yy)),
                (y + 1..h).find(|&yy| !region.get(x, yy)).map(|yy| image.pixel(x, yy)),
            ];
            let n = found.iter().flatten().count() as u32;
            if n == 0 {
                continue;
            }
            let mut acc = [0u32; 3];
            for p in found.iter().flatten() {
                for c in 0..3 {
                    acc[c] += p[c] as u32;
                }
            }
            out.set_pixel(x, y, acc.map(|a| ((a + n / 2) / n) as u8));
        }
    }
    out
}

/// Applies one baseline augmentation to the primary view of `frame`. Depth is never touched.
pub fn baseline_augment(
    frame: &Frame,
    mode: BaselineMode,
    library: &[Patch],
    masks: &BaselineMasks,
    options: &BaselineOptions,
    seed: u64,
) -> Result<Frame, AugmentError> {
    if library.is_empty() && mode != BaselineMode::Spatial {
        return Err(AugmentError::EmptyLibrary);
    }
    let src = frame.rgb();
    let (w, h) = src.dims();
    let mut rgb = src.clone();
    match mode {
        BaselineMode::CopyPaste => {
            for i in 0..options.paste_count {
                let s = sub_seed(seed, &format!("paste/{i}"));
                let patch = &library[seeded_index(mix64(sub_seed(s, "patch")), library.len())];
                if let Some((x, y)) = seeded_corner(&rgb, patch, s) {
                    paste(&mut rgb, patch, x, y);
                }
            }
        }
        BaselineMode::RandomBackground => {
            let pick = &library[seeded_index(mix64(sub_seed(seed, "background")), library.len())];
            let bg = resize_nearest(&pick.rgb, w, h);
            let keep = masks.protected();
            for i in 0..rgb.pixel_count() {
                if !keep.at(i) {
                    rgb.put(i, bg.at(i));
                }
            }
        }
        BaselineMode::RandomDistractors => {
            let keep = masks.protected();
            let mut taken: Vec<Rect> = keep.bbox().into_iter().collect();
            taken.extend(masks.object.bbox());
            taken.extend(masks.receptacle.bbox());
            for i in 0..options.paste_count {
                for attempt in 0..DISTRACTOR_RETRIES {
                    let s = sub_seed(seed, &format!("distractor/{i}/{attempt}"));
                    let patch = &library[seeded_index(mix64(sub_seed(s, "patch")), library.len())];
                    let Some((x, y)) = seeded_corner(&rgb, patch, s) else { continue };
                    let Some(pb) = patch.mask.bbox() else { continue };
                    let placed = Rect { x0: x + pb.x0, y0: y + pb.y0, x1: x + pb.x1, y1: y + pb.y1 };
                    if taken.iter().any(|r| bboxes_overlap(r, &placed)) {
                        continue;
                    }
                    paste(&mut rgb, patch, x, y);
                    taken.push(placed);
                    break;
                }
            }
        }
        BaselineMode::Spatial => {
            let obj = &masks.object;
            if let Some(b) = obj.bbox() {
                let tx = options.max_translation_px * (2.0 * unit_f64(sub_seed(seed, "tx")) - 1.0);
                let ty = options.max_translation_px * (2.0 * unit_f64(sub_seed(seed, "ty")) - 1.0);
                let theta = options.max_rotation_rad * (2.0 * unit_f64(sub_seed(seed, "theta")) - 1.0);
                let (cx, cy) = ((b.x0 + b.x1) as f64 / 2.0, (b.y0 + b.y1) as f64 / 2.0);
                let (sin, cos) = theta.sin_cos();
                let mut moved = fill_from_neighbors(src, obj);
                for y in 0..h {
                    for x in 0..w {
                        // Inverse map target pixel to the source crop.
                        let dx = x as f64 - cx - tx;
                        let dy = y as f64 - cy - ty;
                        let sx = (cos * dx + sin * dy + cx).round();
                        let sy = (-sin * dx + cos * dy + cy).round();
                        if sx < 0.0 || sy < 0.0 || sx >= w as f64 || sy >= h as f64 {
                            continue;
                        }
                        let (sx, sy) = (sx as u32, sy as u32);
                        if obj.get(sx, sy) {
                            moved.set_pixel(x, y, src.pixel(sx, sy));
                        }
                    }
                }
                rgb = moved;
            }
        }
    }
    let mut out = frame.clone();
    out.primary_mut().rgb = rgb;
    Ok(out)
}
