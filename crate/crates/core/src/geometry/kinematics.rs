use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{GeometryError, RigidTransform};

const AXIS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    /// Transform from the parent frame to this joint's zero-position frame.
    pub origin: RigidTransform,
    pub axis: Vector3<f64>,
    pub kind: JointKind,
    pub limits: [f64; 2],
}

impl Joint {
    /// Joint motion for value `q`: rotation about `axis` or translation along it.
    pub fn motion(&self, q: f64) -> RigidTransform {
        match self.kind {
            JointKind::Revolute => RigidTransform::from_axis_angle(&self.axis, q),
            JointKind::Prismatic => RigidTransform::from_translation(self.axis * q),
        }
    }
}

/// Collision-free visual approximation of one link, expressed in its joint frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LinkPrimitive {
    Capsule { radius: f64, a: [f64; 3], b: [f64; 3] },
    Box { half_extents: [f64; 3], pose: [f64; 16] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    /// Index of the joint whose frame carries this primitive.
    pub joint: usize,
    #[serde(flatten)]
    pub primitive: LinkPrimitive,
}

/// Serial chain of single-axis joints.
#[derive(Clone, Debug, PartialEq)]
pub struct KinematicChain {
    pub name: String,
    pub joints: Vec<Joint>,
    pub end_effector_offset: RigidTransform,
    pub links: Vec<LinkGeometry>,
}

impl KinematicChain {
    pub fn new(
        name: impl Into<String>,
        joints: Vec<Joint>,
        end_effector_offset: RigidTransform,
    ) -> Result<Self, GeometryError> {
        let chain = Self { name: name.into(), joints, end_effector_offset, links: Vec::new() };
        chain.check()?;
        Ok(chain)
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn check(&self) -> Result<(), GeometryError> {
        for (i, j) in self.joints.iter().enumerate() {
            j.origin.check().map_err(|e| GeometryError::InvalidChain(format!("joint {i}: {e}")))?;
            if !j.axis.iter().all(|v| v.is_finite()) || (j.axis.norm() - 1.0).abs() > AXIS_TOL {
                return Err(GeometryError::InvalidChain(format!("joint {i}: axis is not unit length")));
            }
            if !(j.limits[0] <= j.limits[1]) {
                return Err(GeometryError::InvalidChain(format!("joint {i}: limits lo > hi")));
            }
        }
        self.end_effector_offset
            .check()
            .map_err(|e| GeometryError::InvalidChain(format!("end effector: {e}")))?;
        for (i, link) in self.links.iter().enumerate() {
            if link.joint >= self.joints.len() {
                return Err(GeometryError::InvalidChain(format!(
                    "link {i} refers to joint {} of {}",
                    link.joint,
                    self.joints.len()
                )));
            }
            let ok = match &link.primitive {
                LinkPrimitive::Capsule { radius, a, b } => {
                    *radius > 0.0 && a.iter().chain(b).all(|v| v.is_finite())
                }
                LinkPrimitive::Box { half_extents, pose } => {
                    half_extents.iter().all(|&h| h > 0.0)
                        && RigidTransform::from_row_major(pose).is_ok()
                }
            };
            if !ok {
                return Err(GeometryError::InvalidChain(format!("link {i}: invalid primitive")));
            }
        }
        Ok(())
    }

    /// Chain that runs `self` and then `next`, with `next` mounted at `self`'s end effector.
    pub fn concat(&self, next: &KinematicChain) -> KinematicChain {
        let mut joints = self.joints.clone();
        let offset = self.joints.len();
        let mut end_effector_offset = next.end_effector_offset;
        match next.joints.split_first() {
            Some((first, rest)) => {
                let mut first = first.clone();
                first.origin = self.end_effector_offset.compose(&first.origin);
                joints.push(first);
                joints.extend(rest.iter().cloned());
            }
            None => end_effector_offset = self.end_effector_offset.compose(&next.end_effector_offset),
        }
        let mut links = self.links.clone();
        links.extend(next.links.iter().map(|l| LinkGeometry { joint: l.joint + offset, ..l.clone() }));
        KinematicChain {
            name: format!("{}+{}", self.name, next.name),
            joints,
            end_effector_offset,
            links,
        }
    }
}

/// World poses of every joint frame plus the end effector.
#[derive(Clone, Debug)]
pub struct FkResult {
    pub joints: Vec<RigidTransform>,
    pub end_effector: RigidTransform,
    /// Indices of joints whose value lies outside its limits.
    pub limit_violations: Vec<usize>,
}

/// Composes joint transforms from the base outward. Limit violations are reported, not rejected.
pub fn forward_kinematics(chain: &KinematicChain, q: &[f64]) -> Result<FkResult, GeometryError> {
    if q.len() != chain.joints.len() {
        return Err(GeometryError::JointCount { expected: chain.joints.len(), found: q.len() });
    }
    let mut frame = RigidTransform::identity();
    let mut joints = Vec::with_capacity(q.len());
    let mut limit_violations = Vec::new();
    for (i, (joint, &qi)) in chain.joints.iter().zip(q).enumerate() {
        if qi < joint.limits[0] || qi > joint.limits[1] {
            limit_violations.push(i);
        }
        frame = frame.compose(&joint.origin).compose(&joint.motion(qi));
        joints.push(frame);
    }
    if !limit_violations.is_empty() {
        log::warn!("chain {}: joints {:?} outside limits", chain.name, limit_violations);
    }
    let end_effector = frame.compose(&chain.end_effector_offset);
    Ok(FkResult { joints, end_effector, limit_violations })
}

#[derive(Serialize, Deserialize)]
struct JointRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    origin: Vec<f64>,
    axis: [f64; 3],
    kind: JointKind,
    limits: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct ChainRecord {
    #[serde(default)]
    name: String,
    joints: Vec<JointRecord>,
    end_effector: Vec<f64>,
    #[serde(default)]
    links: Vec<LinkGeometry>,
}

/// Parses the chain JSON format (`chains/<name>.json`).
pub fn parse_chain(json: &str) -> Result<KinematicChain, GeometryError> {
    let rec: ChainRecord =
        serde_json::from_str(json).map_err(|e| GeometryError::InvalidChain(e.to_string()))?;
    let joints = rec
        .joints
        .into_iter()
        .enumerate()
        .map(|(i, j)| {
            Ok(Joint {
                origin: RigidTransform::from_row_major(&j.origin)
                    .map_err(|e| GeometryError::InvalidChain(format!("joint {i}: {e}")))?,
                axis: Vector3::from(j.axis),
                kind: j.kind,
                limits: j.limits,
            })
        })
        .collect::<Result<Vec<_>, GeometryError>>()?;
    let chain = KinematicChain {
        name: rec.name,
        joints,
        end_effector_offset: RigidTransform::from_row_major(&rec.end_effector)
            .map_err(|e| GeometryError::InvalidChain(format!("end effector: {e}")))?,
        links: rec.links,
    };
    chain.check()?;
    Ok(chain)
}

pub fn load_chain(path: &Path) -> Result<KinematicChain, GeometryError> {
    let text = std::fs::read_to_string(path).map_err(|e| GeometryError::ChainFile {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_chain(&text).map_err(|e| GeometryError::ChainFile {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

impl KinematicChain {
    pub fn to_json(&self) -> String {
        let rec = ChainRecord {
            name: self.name.clone(),
            joints: self
                .joints
                .iter()
                .map(|j| JointRecord {
                    name: None,
                    origin: j.origin.to_row_major().to_vec(),
                    axis: [j.axis.x, j.axis.y, j.axis.z],
                    kind: j.kind,
                    limits: j.limits,
                })
                .collect(),
            end_effector: self.end_effector_offset.to_row_major().to_vec(),
            links: self.links.clone(),
        };
        serde_json::to_string_pretty(&rec).expect("chain serialises")
    }
}
