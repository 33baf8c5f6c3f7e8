use serde::{Deserialize, Serialize};

use crate::backends::{Backend, SegmentRequest, TrackRequest};
use crate::data::{DataError, Image, Mask};
use crate::structured::AugmentError;

/// Consecutive tracker fallbacks that trigger a re-seed from the end effector.
pub const RESEED_AFTER: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrackEvent {
    /// The tracker lost the object and kept the previous mask.
    Fallback { frame: usize },
    /// The mask was replaced by a fresh point-prompted segmentation.
    Reseed { frame: usize, pixels: usize },
    /// A re-seed was due but the end effector was not visible.
    ReseedSkipped { frame: usize },
}

fn backend_err(frame: usize) -> impl FnOnce(crate::backends::BackendError) -> AugmentError {
    move |source| AugmentError::Backend { frame, source }
}

/// Highest-scoring segment containing `pixel`, minus `robot`. Empty when nothing contains it.
pub fn seed_object_mask(
    image: &Image,
    pixel: (u32, u32),
    robot: &Mask,
    backend: &Backend,
    frame: usize,
) -> Result<Mask, AugmentError> {
    let (w, h) = image.dims();
    robot.check_same_dims(&Mask::empty(w, h), "robot mask")?;
    let masks = backend
        .segment(&SegmentRequest { image: image.clone(), point: Some(pixel) })
        .map_err(backend_err(frame))?;
    Ok(masks.into_iter().next().map_or_else(|| Mask::empty(w, h), |m| m.mask.difference(robot)))
}

/// Tracks `initial` from frame 0 through `images`.
///
/// Tracked masks have the frame's robot pixels removed. After [`RESEED_AFTER`] consecutive
/// fallbacks the mask is re-seeded from `seed_pixels[t]` when that pixel is known.
pub fn track_object(
    images: &[&Image],
    robot: &[Mask],
    seed_pixels: &[Option<(u32, u32)>],
    initial: Mask,
    tracker: &Backend,
    segmenter: &Backend,
) -> Result<(Vec<Mask>, Vec<TrackEvent>), AugmentError> {
    if robot.len() != images.len() || seed_pixels.len() != images.len() {
        return Err(AugmentError::Config("robot masks and seed pixels must cover every frame".into()));
    }
    let mut masks = Vec::with_capacity(images.len());
    let mut events = Vec::new();
    if images.is_empty() {
        return Ok((masks, events));
    }
    masks.push(initial);
    let mut streak = 0;
    for t in 1..images.len() {
        let reply = tracker
            .track(&TrackRequest {
                prev_image: images[t - 1].clone(),
                next_image: images[t].clone(),
                prev_mask: masks[t - 1].clone(),
            })
            .map_err(backend_err(t))?;
        let mut mask = reply.mask.difference(&robot[t]);
        if reply.fallback {
            events.push(TrackEvent::Fallback { frame: t });
            streak += 1;
            if streak >= RESEED_AFTER {
                match seed_pixels[t] {
                    Some(p) => {
                        mask = seed_object_mask(images[t], p, &robot[t], segmenter, t)?;
                        events.push(TrackEvent::Reseed { frame: t, pixels: mask.count() });
                        streak = 0;
                    }
                    None => events.push(TrackEvent::ReseedSkipped { frame: t }),
                }
            }
        } else {
            streak = 0;
        }
        masks.push(mask);
    }
    Ok((masks, events))
}

/// Segment-everything masks sharing no pixel with `robot ∪ object`.
pub fn background_candidates(
    image: &Image,
    robot: &Mask,
    object: &Mask,
    backend: &Backend,
    frame: usize,
) -> Result<Vec<Mask>, AugmentError> {
    robot.check_same_dims(object, "object mask")?;
    let blocked = robot.union(object);
    let masks = backend
        .segment(&SegmentRequest { image: image.clone(), point: None })
        .map_err(backend_err(frame))?;
    Ok(masks.into_iter().map(|m| m.mask).filter(|m| !m.intersects(&blocked)).collect())
}

/// Pixel-wise union of `masks`; an empty list gives an empty `width`×`height` mask.
pub fn aggregate_masks(width: u32, height: u32, masks: &[Mask]) -> Result<Mask, DataError> {
    let mut out = Mask::empty(width, height);
    for m in masks {
        out.check_same_dims(m, "aggregated mask")?;
        out = out.union(m);
    }
    Ok(out)
}
