use nalgebra::Vector3;

use super::AugmentError;
use crate::backends::{Backend, InpaintMode, InpaintRequest};
use crate::data::{DepthMap, Frame, Mask, MeshAsset};
use crate::geometry::{composite_depth, render_mesh_depth, CameraModel, RigidTransform};
use crate::{sub_seed, unit_f64};

/// Edit masks grow by this many pixels before inpainting.
pub const EDIT_DILATION: u32 = 2;

/// Replacement width jitter around the old object's width (stays inside the ±25% band).
const WIDTH_JITTER: f64 = 0.15;
const FIT_ITERATIONS: usize = 4;

fn backend_err(source: crate::backends::BackendError) -> AugmentError {
    AugmentError::Backend { frame: 0, source }
}

/// Recolors the masked object with `prompt`, conditioned on the unchanged depth.
///
/// The edit region is `mask` dilated by [`EDIT_DILATION`] minus `keep`.
pub fn augment_in_category(
    frame: &Frame,
    mask: &Mask,
    keep: &Mask,
    prompt: &str,
    seed: u64,
    backend: &Backend,
) -> Result<Frame, AugmentError> {
    if mask.is_empty() {
        return Err(AugmentError::EmptyMask("object"));
    }
    let depth = frame.depth().ok_or(AugmentError::MissingDepth(0))?;
    let edit = mask.dilate(EDIT_DILATION).difference(keep);
    let rgb = backend
        .inpaint(&InpaintRequest {
            image: frame.rgb().clone(),
            mask: edit,
            depth: Some(depth.clone()),
            prompt: prompt.to_string(),
            seed,
            mode: InpaintMode::DepthGuided,
        })
        .map_err(backend_err)?;
    let mut out = frame.clone();
    out.primary_mut().rgb = rgb;
    Ok(out)
}

/// Replaces everything outside `protected` with a generated background. Depth is unchanged.
pub fn augment_background(
    frame: &Frame,
    protected: &[&Mask],
    prompt: &str,
    seed: u64,
    backend: &Backend,
) -> Result<Frame, AugmentError> {
    let (w, h) = frame.rgb().dims();
    let keep = protected.iter().fold(Mask::empty(w, h), |acc, m| acc.union(m));
    let rgb = backend
        .inpaint(&InpaintRequest {
            image: frame.rgb().clone(),
            mask: keep.complement(),
            depth: None,
            prompt: prompt.to_string(),
            seed,
            mode: InpaintMode::Inpaint,
        })
        .map_err(backend_err)?;
    let mut out = frame.clone();
    out.primary_mut().rgb = rgb;
    Ok(out)
}

/// Fills every pixel of `region` from the nearest valid pixels outside it along its row and
/// column (left, right, up, down), averaging whichever of the four exist.
pub fn backfill_depth(depth: &DepthMap, region: &Mask) -> Result<DepthMap, AugmentError> {
    let (w, h) = depth.dims();
    let source = |x: u32, y: u32| if region.get(x, y) { None } else { depth.valid(x, y) };
    let mut out = depth.clone();
    for y in 0..h {
        for x in 0..w {
            if !region.get(x, y) {
                continue;
            }
            let found = [
                (0..x).rev().find_map(|xx| source(xx, y)),
                (x + 1..w).find_map(|xx| source(xx, y)),
                (0..y).rev().find_map(|yy| source(x, yy)),
                (y + 1..h).find_map(|yy| source(x, yy)),
            ];
            let (sum, n) = found.iter().flatten().fold((0.0f64, 0u32), |(s, n), &d| (s + d as f64, n + 1));
            if n == 0 {
                return Err(AugmentError::BackfillImpossible(format!(
                    "pixel ({x}, {y}) has no valid neighbor along its row or column"
                )));
            }
            out.set(x, y, (sum / n as f64) as f32);
        }
    }
    Ok(out)
}

/// A replacement mesh fitted into the footprint of an old object.
#[derive(Clone, Debug)]
pub struct Placement {
    /// Scaled copy of the asset, recentred so its bounding-box bottom center is the origin.
    pub mesh: MeshAsset,
    pub scale: f64,
    pub pose: RigidTransform,
    pub depth: DepthMap,
    pub mask: Mask,
}

/// Bottom-center pixel of the mask's bbox and a valid depth for it, searching upward in that
/// column and then across the mask for the nearest valid sample.
fn anchor_pixel(mask: &Mask, depth: &DepthMap) -> Option<(u32, u32, f32)> {
    let b = mask.bbox()?;
    let xc = (b.x0 + b.x1) / 2;
    if let Some((y, d)) = (b.y0..=b.y1).rev().find_map(|y| depth.valid(xc, y).map(|d| (y, d))) {
        return Some((xc, y, d));
    }
    let (w, h) = mask.dims();
    (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| mask.get(x, y))
        .filter_map(|(x, y)| depth.valid(x, y).map(|d| (x, y, d)))
        .min_by_key(|&(x, y, _)| (x as i64 - xc as i64).abs() + (b.y1 as i64 - y as i64).abs())
}

/// Poses and scales `asset` to stand where `old_mask` was.
///
/// The bbox bottom center of the mesh sits on the world point behind the old mask's bbox
/// bottom-center pixel, rotated by a seeded yaw about world z, and uniformly scaled so its
/// rendered width matches the old bbox width times a seeded factor in `[0.85, 1.15]`.
pub fn place_replacement(
    old_mask: &Mask,
    depth: &DepthMap,
    camera: &CameraModel,
    asset: &MeshAsset,
    seed: u64,
) -> Result<Placement, AugmentError> {
    let (w, h) = old_mask.dims();
    let old_box = old_mask.bbox().ok_or(AugmentError::EmptyMask("old object"))?;
    let (ax, ay, ad) = anchor_pixel(old_mask, depth)
        .ok_or_else(|| AugmentError::BackfillImpossible("old object has no valid depth".into()))?;
    let anchor = camera.unproject(ax as f64 + 0.5, ay as f64 + 0.5, ad as f64);

    let (lo, hi) = asset.bounds();
    let base = Vector3::new((lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0, lo.z);
    let centred = MeshAsset { vertices: asset.vertices.iter().map(|v| v - base).collect(), ..asset.clone() };
    let yaw = unit_f64(sub_seed(seed, "yaw")) * std::f64::consts::TAU;
    let pose = RigidTransform::from_translation(anchor).compose(&RigidTransform::from_axis_angle(&Vector3::z(), yaw));
    let jitter = 1.0 + WIDTH_JITTER * (2.0 * unit_f64(sub_seed(seed, "width")) - 1.0);
    let target = old_box.width() as f64 * jitter;

    // Initial guess from the metric width of the old mask at the anchor depth.
    let extent = (hi.x - lo.x).max(hi.y - lo.y).max(hi.z - lo.z);
    if !(extent > 0.0) {
        return Err(AugmentError::OffScreen(asset.name.clone()));
    }
    let mut scale = old_box.width() as f64 * ad as f64 / camera.fx / extent;
    // Widths are whole pixels, so small footprints can oscillate around the target; keep the
    // closest fit seen.
    let mut best: Option<(f64, f64, (DepthMap, Mask))> = None;
    for _ in 0..FIT_ITERATIONS {
        let rendered = render_mesh_depth(&centred.scaled(scale), &pose, camera, w, h);
        let Some(b) = rendered.1.bbox() else { break };
        let ratio = target / b.width() as f64;
        let miss = (b.width() as f64 - target).abs();
        if best.as_ref().is_none_or(|(m, _, _)| miss < *m) {
            best = Some((miss, scale, rendered));
        }
        if (ratio - 1.0).abs() < 0.02 {
            break;
        }
        scale *= ratio;
    }
    let Some((_, scale, (depth, mask))) = best else {
        return Err(AugmentError::OffScreen(asset.name.clone()));
    };
    Ok(Placement { mesh: centred.scaled(scale), scale, pose, depth, mask })
}

#[derive(Clone, Debug)]
pub struct CrossCategoryOutput {
    pub frame: Frame,
    /// Visible rendered footprint of the new object.
    pub mask: Mask,
    pub placement: Placement,
}

/// Swaps the masked object for `asset`, updating depth from the rendered mesh.
///
/// Depth under the old mask is backfilled, then the visible new footprint
/// (`rendered mask \ occluders`) takes the rasterized depth. RGB is regenerated over the dilated
/// union of old and new footprints, excluding `occluders`.
#[allow(clippy::too_many_arguments)]
pub fn augment_cross_category(
    frame: &Frame,
    old_mask: &Mask,
    occluders: &Mask,
    asset: &MeshAsset,
    prompt: &str,
    seed: u64,
    camera: &CameraModel,
    backend: &Backend,
) -> Result<CrossCategoryOutput, AugmentError> {
    if old_mask.is_empty() {
        return Err(AugmentError::EmptyMask("object"));
    }
    let depth = frame.depth().ok_or(AugmentError::MissingDepth(0))?;
    let old = old_mask.difference(occluders);
    let placement = place_replacement(&old, depth, camera, asset, seed)?;
    let new_mask = placement.mask.difference(occluders);
    let backfilled = backfill_depth(depth, &old)?;
    let new_depth = composite_depth(&backfilled, &placement.depth, &new_mask)?;
    let edit = old.union(&new_mask).dilate(EDIT_DILATION).difference(occluders);
    let rgb = backend
        .inpaint(&InpaintRequest {
            image: frame.rgb().clone(),
            mask: edit,
            depth: Some(new_depth.clone()),
            prompt: prompt.to_string(),
            seed,
            mode: InpaintMode::DepthGuided,
        })
        .map_err(backend_err)?;
    let mut out = frame.clone();
    out.primary_mut().rgb = rgb;
    out.primary_mut().depth = Some(new_depth);
    Ok(CrossCategoryOutput { frame: out, mask: new_mask, placement })
}
