use nalgebra::Vector3;

use super::prompt::{bare_noun, sample_prompt, seeded_index, PromptGrammar};
use super::AugmentError;
use crate::backends::{Backend, InpaintMode, InpaintRequest};
use crate::data::{DepthMap, Frame, Mask, MeshAsset};
use crate::geometry::{bboxes_overlap, composite_depth, render_mesh_depth, CameraModel, Rect, RigidTransform, Workspace};
use crate::{mix64, sub_seed, unit_f64};

use super::edit::EDIT_DILATION;

/// Placement attempts per requested distractor before it is skipped.
pub const DISTRACTOR_RETRIES: u32 = 20;

#[derive(Clone, Debug)]
pub struct PlacedDistractor {
    pub asset: String,
    pub pose: RigidTransform,
    pub mask: Mask,
    pub depth: DepthMap,
    pub prompt: String,
}

impl PlacedDistractor {
    pub fn bbox(&self) -> Rect {
        self.mask.bbox().expect("accepted distractors are visible")
    }
}

fn bottom_centred(asset: &MeshAsset) -> MeshAsset {
    let (lo, hi) = asset.bounds();
    let base = Vector3::new((lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0, lo.z);
    MeshAsset { vertices: asset.vertices.iter().map(|v| v - base).collect(), ..asset.clone() }
}

/// Drops up to `count` meshes from `assets` at uniform table positions, rejecting any whose
/// image bbox touches a protected bbox or an already accepted distractor.
#[allow(clippy::too_many_arguments)]
pub fn place_distractors(
    frame: &Frame,
    protected: &[&Mask],
    assets: &[&MeshAsset],
    count: u32,
    seed: u64,
    camera: &CameraModel,
    workspace: &Workspace,
    grammar: &PromptGrammar,
    backend: &Backend,
) -> Result<(Frame, Vec<PlacedDistractor>), AugmentError> {
    let depth = frame.depth().ok_or(AugmentError::MissingDepth(0))?;
    workspace.check()?;
    let (w, h) = frame.rgb().dims();
    if assets.is_empty() || count == 0 {
        return Ok((frame.clone(), Vec::new()));
    }
    let keep_out: Vec<Rect> = protected.iter().filter_map(|m| m.bbox()).collect();
    let meshes: Vec<MeshAsset> = assets.iter().map(|a| bottom_centred(a)).collect();

    let mut placed: Vec<PlacedDistractor> = Vec::new();
    for i in 0..count {
        for attempt in 0..DISTRACTOR_RETRIES {
            let s = sub_seed(seed, &format!("distractor/{i}/{attempt}"));
            let k = seeded_index(mix64(sub_seed(s, "asset")), meshes.len());
            let x = workspace.x_range[0] + unit_f64(sub_seed(s, "x")) * (workspace.x_range[1] - workspace.x_range[0]);
            let y = workspace.y_range[0] + unit_f64(sub_seed(s, "y")) * (workspace.y_range[1] - workspace.y_range[0]);
            let yaw = unit_f64(sub_seed(s, "yaw")) * std::f64::consts::TAU;
            let pose = RigidTransform::from_translation(Vector3::new(x, y, workspace.table_height))
                .compose(&RigidTransform::from_axis_angle(&Vector3::z(), yaw));
            let (rdepth, rmask) = render_mesh_depth(&meshes[k], &pose, camera, w, h);
            let Some(b) = rmask.bbox() else { continue };
            let collides = keep_out.iter().any(|r| bboxes_overlap(r, &b))
                || placed.iter().any(|p| bboxes_overlap(&p.bbox(), &b));
            if collides {
                continue;
            }
            let prompt = sample_prompt(grammar, bare_noun(&assets[k].prompt_noun), sub_seed(s, "prompt"));
            placed.push(PlacedDistractor { asset: assets[k].name.clone(), pose, mask: rmask, depth: rdepth, prompt });
            break;
        }
    }
    if (placed.len() as u32) < count {
        log::debug!("placed {} of {count} distractors", placed.len());
    }

    let mut out = frame.clone();
    let mut new_depth = depth.clone();
    let protected_union = protected.iter().fold(Mask::empty(w, h), |acc, m| acc.union(m));
    let mut rgb = frame.rgb().clone();
    for (i, d) in placed.iter().enumerate() {
        new_depth = composite_depth(&new_depth, &d.depth, &d.mask)?;
        let others = placed
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .fold(protected_union.clone(), |acc, (_, o)| acc.union(&o.mask));
        let edit = d.mask.dilate(EDIT_DILATION).difference(&others);
        rgb = backend
            .inpaint(&InpaintRequest {
                image: rgb,
                mask: edit,
                depth: Some(new_depth.clone()),
                prompt: d.prompt.clone(),
                seed: sub_seed(seed, &format!("distractor/{i}/inpaint")),
                mode: InpaintMode::DepthGuided,
            })
            .map_err(|source| AugmentError::Backend { frame: 0, source })?;
    }
    out.primary_mut().rgb = rgb;
    out.primary_mut().depth = Some(new_depth);
    Ok((out, placed))
}
