//! Rigid transforms, kinematics, projections and depth rasterization.

mod camera;
mod kinematics;
mod raster;
mod rect;
mod topdown;
mod transform;

pub use camera::{project_point, CameraModel, Projection};
pub use kinematics::{
    forward_kinematics, load_chain, parse_chain, FkResult, Joint, JointKind, KinematicChain,
    LinkGeometry, LinkPrimitive,
};
pub use raster::{composite_depth, render_mesh_depth, render_triangles, NEAR_PLANE};
pub use rect::{bboxes_overlap, Rect};
pub use topdown::{project_topdown, topdown_pixel_to_world, Heightmap, TopDown, Workspace};
pub use transform::RigidTransform;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("expected {expected} joint values, got {found}")]
    JointCount { expected: usize, found: usize },
    #[error("point is at or behind the camera plane (z = {z})")]
    NotVisible { z: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("pixel ({x}, {y}) is outside the {width}x{height} grid")]
    OutOfGrid { x: i64, y: i64, width: u32, height: u32 },
    #[error("heightmap cell ({x}, {y}) holds no height sample")]
    InvalidCell { x: u32, y: u32 },
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
    #[error("invalid workspace: {0}")]
    InvalidWorkspace(String),
    #[error("invalid kinematic chain: {0}")]
    InvalidChain(String),
    #[error("cannot read chain {path}: {message}")]
    ChainFile { path: String, message: String },
}
