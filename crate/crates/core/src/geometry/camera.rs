use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{GeometryError, RigidTransform};

/// Smallest camera-frame depth treated as in front of the camera.
const MIN_DEPTH: f64 = 1e-9;

/// Pinhole camera. `pose` maps camera coordinates (x right, y down, z forward) to world.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub pose: RigidTransform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    /// Camera-frame z, meters.
    pub depth: f64,
}

impl CameraModel {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, pose: RigidTransform) -> Result<Self, GeometryError> {
        let cam = Self { fx, fy, cx, cy, pose };
        cam.check()?;
        Ok(cam)
    }

    pub fn check(&self) -> Result<(), GeometryError> {
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(GeometryError::InvalidTransform(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(GeometryError::InvalidTransform("non-finite principal point".into()));
        }
        self.pose.check()
    }

    pub fn world_to_camera(&self) -> RigidTransform {
        self.pose.inverse()
    }

    /// Pinhole projection of a point already in camera coordinates.
    pub fn project_camera_point(&self, p: &Vector3<f64>) -> Result<Projection, GeometryError> {
        if p.z <= MIN_DEPTH {
            return Err(GeometryError::NotVisible { z: p.z });
        }
        Ok(Projection {
            u: self.fx * p.x / p.z + self.cx,
            v: self.fy * p.y / p.z + self.cy,
            depth: p.z,
        })
    }

    pub fn project_point(&self, world: &Vector3<f64>) -> Result<Projection, GeometryError> {
        self.project_camera_point(&self.world_to_camera().transform_point(world))
    }

    /// Camera-frame point at pixel position `(u, v)` and camera-frame depth `depth`.
    pub fn unproject_camera(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx * depth, (v - self.cy) / self.fy * depth, depth)
    }

    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        self.pose.transform_point(&self.unproject_camera(u, v, depth))
    }
}

/// Free-function form of [`CameraModel::project_point`].
pub fn project_point(camera: &CameraModel, p: &Vector3<f64>) -> Result<Projection, GeometryError> {
    camera.project_point(p)
}
