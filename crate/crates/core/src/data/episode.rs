use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{DepthMap, Image, Mask};
use crate::geometry::{CameraModel, KinematicChain};

/// Camera declared by an episode. The first camera of an episode is its primary view.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedCamera {
    pub name: String,
    pub width: u32,
    pub height: u32,
    pub model: CameraModel,
}

/// One camera's observation within a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct View {
    pub rgb: Image,
    pub depth: Option<DepthMap>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    /// Parallel to [`Episode::cameras`].
    pub views: Vec<View>,
    pub joints: Vec<f64>,
    pub gripper: f64,
    /// Opaque action payload; never read or rewritten by the augmenters.
    pub action: Vec<f64>,
}

impl Frame {
    pub fn primary(&self) -> &View {
        &self.views[0]
    }

    pub fn primary_mut(&mut self) -> &mut View {
        &mut self.views[0]
    }

    pub fn rgb(&self) -> &Image {
        &self.views[0].rgb
    }

    pub fn depth(&self) -> Option<&DepthMap> {
        self.views[0].depth.as_ref()
    }

    /// True when joints, gripper and action are bitwise equal to `other`'s.
    pub fn same_payload(&self, other: &Frame) -> bool {
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        bits(&self.joints) == bits(&other.joints)
            && self.gripper.to_bits() == other.gripper.to_bits()
            && bits(&self.action) == bits(&other.action)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub id: String,
    pub frames: Vec<Frame>,
    pub task_text: String,
    pub object_label: String,
    pub receptacle_label: String,
    /// Annotations on frame 0 of the primary camera.
    pub object_mask: Option<Mask>,
    pub receptacle_mask: Option<Mask>,
    pub chain_ref: String,
    pub cameras: Vec<NamedCamera>,
}

impl Episode {
    pub fn primary_camera(&self) -> &NamedCamera {
        &self.cameras[0]
    }

    /// Every type invariant that does not need the kinematic chain.
    pub fn check_invariants(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |frame: Option<usize>, message: String| out.push(Violation { frame, message });

        if !is_safe_name(&self.id) {
            push(None, format!("episode id {:?} is not a valid directory name", self.id));
        }
        if self.frames.is_empty() {
            push(None, "episode has no frames".into());
        }
        if self.cameras.is_empty() {
            push(None, "episode declares no cameras".into());
        }
        let mut names = HashSet::new();
        for cam in &self.cameras {
            if !is_safe_name(&cam.name) || cam.name.contains('.') {
                push(None, format!("camera name {:?} is not usable in file names", cam.name));
            }
            if !names.insert(cam.name.as_str()) {
                push(None, format!("camera {:?} declared twice", cam.name));
            }
            if cam.width == 0 || cam.height == 0 {
                push(None, format!("camera {:?} has zero size", cam.name));
            }
            if let Err(e) = cam.model.check() {
                push(None, format!("camera {:?}: {e}", cam.name));
            }
        }

        let action_width = self.frames.first().map(|f| f.action.len());
        for (fi, frame) in self.frames.iter().enumerate() {
            let f = Some(fi);
            if frame.views.len() != self.cameras.len() {
                push(f, format!("{} views for {} cameras", frame.views.len(), self.cameras.len()));
            }
            for (view, cam) in frame.views.iter().zip(&self.cameras) {
                if view.rgb.dims() != (cam.width, cam.height) {
                    push(f, format!(
                        "camera {:?} image is {:?}, declared {:?}",
                        cam.name,
                        view.rgb.dims(),
                        (cam.width, cam.height)
                    ));
                }
                if let Some(depth) = &view.depth {
                    if depth.dims() != view.rgb.dims() {
                        push(f, format!(
                            "camera {:?} depth is {:?}, image is {:?}",
                            cam.name,
                            depth.dims(),
                            view.rgb.dims()
                        ));
                    }
                    let w = depth.width() as usize;
                    for (i, &d) in depth.values().iter().enumerate() {
                        if !(d.is_finite() && d >= 0.0) {
                            push(f, format!(
                                "camera {:?} depth pixel ({}, {}) holds {d}",
                                cam.name,
                                i % w,
                                i / w
                            ));
                        }
                    }
                }
            }
            if !frame.joints.iter().all(|j| j.is_finite()) {
                push(f, "non-finite joint value".into());
            }
            if !(0.0..=1.0).contains(&frame.gripper) {
                push(f, format!("gripper {} outside [0, 1]", frame.gripper));
            }
            if !frame.action.iter().all(|a| a.is_finite()) {
                push(f, "non-finite action value".into());
            }
            if Some(frame.action.len()) != action_width {
                push(f, format!(
                    "action width {} differs from frame 0 ({})",
                    frame.action.len(),
                    action_width.unwrap_or(0)
                ));
            }
        }

        if let Some(cam) = self.cameras.first() {
            for (name, mask, label) in [
                ("object", &self.object_mask, &self.object_label),
                ("receptacle", &self.receptacle_mask, &self.receptacle_label),
            ] {
                if let Some(m) = mask {
                    if m.dims() != (cam.width, cam.height) {
                        push(Some(0), format!(
                            "{name} mask is {:?}, primary image is {:?}",
                            m.dims(),
                            (cam.width, cam.height)
                        ));
                    }
                    if label.trim().is_empty() {
                        push(None, format!("{name} mask present but {name} label is empty"));
                    }
                }
            }
        }
        out
    }
}

/// One broken invariant, located by frame where it applies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub frame: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.frame {
            Some(i) => write!(f, "frame {i}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// All invariant violations of `episode`, including joint counts against `chain`.
pub fn validate_episode(episode: &Episode, chain: &KinematicChain) -> Vec<Violation> {
    let mut out = episode.check_invariants();
    for (i, frame) in episode.frames.iter().enumerate() {
        if frame.joints.len() != chain.dof() {
            out.push(Violation {
                frame: Some(i),
                message: format!(
                    "{} joint values for the {}-joint chain {:?}",
                    frame.joints.len(),
                    chain.dof(),
                    chain.name
                ),
            });
        }
    }
    out
}

pub(crate) fn is_safe_name(s: &str) -> bool {
    !s.is_empty()
        && s != "."
        && s != ".."
        && !s.contains(['/', '\\', '\0'])
}
