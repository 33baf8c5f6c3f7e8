//! Automatic per-trajectory augmentation.
//!
//! The manipulated object is found by point-prompting the segmenter at the projected end
//! effector on frame 0 and tracking the result through the trajectory. Background segments
//! that touch neither the robot nor the object are aggregated into the background edit
//! region. RGB only: depth, joints and actions pass through untouched.

mod robot;
mod track;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use robot::{
    box_mesh, capsule_mesh, end_effector_pixel, primitive_mesh, robot_mask, robot_mask_inflated, CAPSULE_RINGS,
    CAPSULE_SEGMENTS, LINK_INFLATION,
};
pub use track::{aggregate_masks, background_candidates, seed_object_mask, track_object, TrackEvent, RESEED_AFTER};

use crate::backends::{BackendSet, InpaintMode, InpaintRequest};
use crate::data::{Episode, Mask};
use crate::geometry::KinematicChain;
use crate::pipeline::derive_seed;
use crate::structured::{bare_noun, sample_prompt, AugmentError, Component, PlanSettings, MAX_PLAN_ATTEMPTS};
use crate::{mix64, unit_f64};

/// Components the video regime can change.
pub const VIDEO_COMPONENTS: [Component; 2] = [Component::ObjectTexture, Component::TableBackground];

/// One video augmentation: a single object prompt and seed for the whole trajectory, and a
/// background prompt with a fresh seed per frame.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoPlan {
    pub components: BTreeSet<Component>,
    pub object_prompt: String,
    pub background_prompt: String,
    pub object_seed: u64,
    pub background_seeds: Vec<u64>,
}

impl VideoPlan {
    pub fn has(&self, c: Component) -> bool {
        self.components.contains(&c)
    }
}

/// Samples a video plan using the object-texture and table probabilities of `settings`.
pub fn plan_video(
    settings: &PlanSettings,
    episode: &Episode,
    aug_index: u64,
    global_seed: u64,
) -> Result<VideoPlan, AugmentError> {
    settings.probabilities.check()?;
    settings.grammar.check()?;
    let seed = |frame: u64, tag: &str| derive_seed(global_seed, &episode.id, aug_index, frame, tag);
    let mut components = BTreeSet::new();
    for attempt in 0..MAX_PLAN_ATTEMPTS {
        components = VIDEO_COMPONENTS
            .into_iter()
            .filter(|&c| unit_f64(mix64(seed(0, &format!("video/{attempt}/{}", c.name())))) < settings.probabilities.get(c))
            .collect();
        if !components.is_empty() {
            break;
        }
    }
    if components.is_empty() {
        return Err(AugmentError::EmptyPlan(MAX_PLAN_ATTEMPTS));
    }
    let noun = match bare_noun(&episode.object_label) {
        "" => "object",
        n => n,
    };
    Ok(VideoPlan {
        components,
        object_prompt: sample_prompt(&settings.grammar, noun, seed(0, "object_prompt")),
        background_prompt: sample_prompt(&settings.grammar, &settings.background_noun, seed(0, "background_prompt")),
        object_seed: seed(0, "object"),
        background_seeds: (0..episode.frames.len() as u64).map(|t| seed(t, "background")).collect(),
    })
}

/// Per-frame masks of one camera view.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryMasks {
    pub object: Vec<Mask>,
    pub robot: Vec<Mask>,
    pub background: Vec<Vec<Mask>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewEvent {
    pub view: String,
    #[serde(flatten)]
    pub event: TrackEvent,
}

#[derive(Clone, Debug)]
pub struct VideoOutput {
    pub episode: Episode,
    /// Parallel to the episode's cameras.
    pub masks: Vec<TrajectoryMasks>,
    pub events: Vec<ViewEvent>,
}

/// Derives the masks of every view without editing anything.
pub fn trajectory_masks(
    episode: &Episode,
    chain: &KinematicChain,
    with_background: bool,
    backends: &BackendSet,
) -> Result<(Vec<TrajectoryMasks>, Vec<ViewEvent>), AugmentError> {
    let mut all = Vec::with_capacity(episode.cameras.len());
    let mut events = Vec::new();
    for (v, cam) in episode.cameras.iter().enumerate() {
        let images: Vec<_> = episode.frames.iter().map(|f| &f.views[v].rgb).collect();
        let (w, h) = (cam.width, cam.height);
        let robot = episode
            .frames
            .iter()
            .map(|f| robot_mask(chain, &f.joints, &cam.model, w, h))
            .collect::<Result<Vec<_>, _>>()?;
        let seed_pixels: Vec<Option<(u32, u32)>> = episode
            .frames
            .iter()
            .map(|f| {
                let p = end_effector_pixel(chain, &f.joints, &cam.model).ok()?;
                let (x, y) = (p.u.floor(), p.v.floor());
                (x >= 0.0 && y >= 0.0 && x < w as f64 && y < h as f64).then_some((x as u32, y as u32))
            })
            .collect();
        let initial = match seed_pixels.first().copied().flatten() {
            Some(p) => seed_object_mask(images[0], p, &robot[0], &backends.segment, 0)?,
            None => Mask::empty(w, h),
        };
        let (object, ev) = track_object(&images, &robot, &seed_pixels, initial, &backends.track, &backends.segment)?;
        events.extend(ev.into_iter().map(|event| ViewEvent { view: cam.name.clone(), event }));
        let background = if with_background {
            (0..images.len())
                .map(|t| background_candidates(images[t], &robot[t], &object[t], &backends.segment, t))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            vec![Vec::new(); images.len()]
        };
        all.push(TrajectoryMasks { object, robot, background });
    }
    Ok((all, events))
}

/// Applies `plan` to every frame of every view.
///
/// The object region is the tracked mask (robot pixels excluded, no dilation) and uses the
/// same prompt and seed on each frame. The background region is the aggregated candidate
/// mask minus robot and object, with a per-frame seed.
pub fn augment_trajectory(
    episode: &Episode,
    chain: &KinematicChain,
    plan: &VideoPlan,
    backends: &BackendSet,
) -> Result<VideoOutput, AugmentError> {
    if plan.background_seeds.len() != episode.frames.len() {
        return Err(AugmentError::Config(format!(
            "plan has {} background seeds for {} frames",
            plan.background_seeds.len(),
            episode.frames.len()
        )));
    }
    let (masks, events) = trajectory_masks(episode, chain, plan.has(Component::TableBackground), backends)?;
    if plan.has(Component::ObjectTexture) && masks.iter().any(|m| m.object.first().is_none_or(|o| o.is_empty())) {
        return Err(AugmentError::EmptyMask("manipulated object"));
    }
    let mut out = episode.clone();
    for (v, m) in masks.iter().enumerate() {
        for (t, frame) in out.frames.iter_mut().enumerate() {
            let view = &mut frame.views[v];
            let (w, h) = view.rgb.dims();
            let object = m.object[t].difference(&m.robot[t]);
            let inpaint = |image, mask, prompt: &str, seed| {
                backends
                    .inpaint
                    .inpaint(&InpaintRequest { image, mask, depth: None, prompt: prompt.to_string(), seed, mode: InpaintMode::Inpaint })
                    .map_err(|source| AugmentError::Backend { frame: t, source })
            };
            if plan.has(Component::ObjectTexture) {
                view.rgb = inpaint(view.rgb.clone(), object.clone(), &plan.object_prompt, plan.object_seed)?;
            }
            if plan.has(Component::TableBackground) {
                let region = aggregate_masks(w, h, &m.background[t])?.difference(&m.robot[t].union(&object));
                view.rgb = inpaint(view.rgb.clone(), region, &plan.background_prompt, plan.background_seeds[t])?;
            }
        }
    }
    Ok(VideoOutput { episode: out, masks, events })
}
