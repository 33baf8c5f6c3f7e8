#![allow(dead_code)]

pub mod scenarios;
pub mod server;

use std::path::Path;

use augforge_core::geometry::{CameraModel, Joint, JointKind, KinematicChain, RigidTransform};
use nalgebra::{Matrix3, Matrix4, Vector3};
use sha2::{Digest, Sha256};

/// Small deterministic generator for test inputs (SplitMix64).
pub struct Rng(pub u64);

impl Rng {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.f64()
    }

    pub fn unit_vector(&mut self) -> Vector3<f64> {
        loop {
            let v = Vector3::new(self.range(-1.0, 1.0), self.range(-1.0, 1.0), self.range(-1.0, 1.0));
            let n = v.norm();
            if n > 0.1 && n <= 1.0 {
                return v / n;
            }
        }
    }

    pub fn rotation(&mut self) -> RigidTransform {
        let axis = self.unit_vector();
        RigidTransform::from_axis_angle(&axis, self.range(-3.1, 3.1))
    }
}

/// Homogeneous rotation about a unit axis, entries written out from Rodrigues' formula.
pub fn rot4(axis: &Vector3<f64>, angle: f64) -> Matrix4<f64> {
    let (x, y, z) = (axis.x, axis.y, axis.z);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    Matrix4::new(
        t * x * x + c,     t * x * y - s * z, t * x * z + s * y, 0.0,
        t * x * y + s * z, t * y * y + c,     t * y * z - s * x, 0.0,
        t * x * z - s * y, t * y * z + s * x, t * z * z + c,     0.0,
        0.0, 0.0, 0.0, 1.0,
    )
}

pub fn trans4(v: &Vector3<f64>) -> Matrix4<f64> {
    Matrix4::new(1.0, 0.0, 0.0, v.x, 0.0, 1.0, 0.0, v.y, 0.0, 0.0, 1.0, v.z, 0.0, 0.0, 0.0, 1.0)
}

pub fn mat4(t: &RigidTransform) -> Matrix4<f64> {
    let r = &t.rotation;
    let p = &t.translation;
    Matrix4::new(
        r[(0, 0)], r[(0, 1)], r[(0, 2)], p.x,
        r[(1, 0)], r[(1, 1)], r[(1, 2)], p.y,
        r[(2, 0)], r[(2, 1)], r[(2, 2)], p.z,
        0.0, 0.0, 0.0, 1.0,
    )
}

/// FK as a plain product of 4×4 matrices: per-joint frames, then the end effector.
pub fn fk_oracle(chain: &KinematicChain, q: &[f64]) -> (Vec<Matrix4<f64>>, Matrix4<f64>) {
    let mut m = Matrix4::identity();
    let mut frames = Vec::new();
    for (j, &qi) in chain.joints.iter().zip(q) {
        let motion = match j.kind {
            JointKind::Revolute => rot4(&j.axis, qi),
            JointKind::Prismatic => trans4(&(j.axis * qi)),
        };
        m = m * mat4(&j.origin) * motion;
        frames.push(m);
    }
    (frames, m * mat4(&chain.end_effector_offset))
}

pub fn random_chain(rng: &mut Rng, dof: usize) -> KinematicChain {
    let joints = (0..dof)
        .map(|_| {
            let origin = RigidTransform::from_translation(Vector3::new(rng.range(-0.5, 0.5), rng.range(-0.5, 0.5), rng.range(0.0, 0.5)))
                .compose(&rng.rotation());
            let kind = if rng.f64() < 0.8 { JointKind::Revolute } else { JointKind::Prismatic };
            Joint { origin, axis: rng.unit_vector(), kind, limits: [-3.2, 3.2] }
        })
        .collect();
    let ee = RigidTransform::from_translation(Vector3::new(0.0, 0.0, rng.range(0.0, 0.2))).compose(&rng.rotation());
    KinematicChain::new("random", joints, ee).unwrap()
}

/// Nearest positive hit of the ray `origin + t·dir` (Möller–Trumbore), as the parameter `t`.
pub fn ray_triangle(origin: &Vector3<f64>, dir: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - a;
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t > 0.0).then_some(t)
}

/// Per-pixel camera-frame depth of the nearest triangle along the pixel-centre ray.
pub fn raycast_depth(
    vertices: &[Vector3<f64>],
    triangles: &[[u32; 3]],
    model_to_world: &RigidTransform,
    camera: &CameraModel,
    width: u32,
    height: u32,
) -> Vec<Option<f64>> {
    let to_cam = camera.world_to_camera().compose(model_to_world);
    let cam: Vec<Vector3<f64>> = vertices.iter().map(|v| to_cam.transform_point(v)).collect();
    let mut out = Vec::with_capacity((width * height) as usize);
    for y in 0..height {
        for x in 0..width {
            // Direction with unit z, so the hit parameter is the depth.
            let dir = Vector3::new((x as f64 + 0.5 - camera.cx) / camera.fx, (y as f64 + 0.5 - camera.cy) / camera.fy, 1.0);
            let hit = triangles
                .iter()
                .filter_map(|t| ray_triangle(&Vector3::zeros(), &dir, &cam[t[0] as usize], &cam[t[1] as usize], &cam[t[2] as usize]))
                .fold(None, |best: Option<f64>, t| Some(best.map_or(t, |b| b.min(t))));
            out.push(hit);
        }
    }
    out
}

/// Randomly stretched and rotated n-gon bipyramid: convex, closed, in front of the camera.
pub fn random_convex_mesh(rng: &mut Rng) -> (Vec<Vector3<f64>>, Vec<[u32; 3]>, RigidTransform) {
    let n = 3 + (rng.next_u64() % 6) as usize;
    let mut v: Vec<Vector3<f64>> = (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / n as f64;
            Vector3::new(t.cos(), t.sin(), 0.0)
        })
        .collect();
    v.push(Vector3::new(0.0, 0.0, 1.0));
    v.push(Vector3::new(0.0, 0.0, -1.0));
    let scale = Matrix3::from_diagonal(&Vector3::new(rng.range(0.1, 0.4), rng.range(0.1, 0.4), rng.range(0.1, 0.4)));
    let v = v.into_iter().map(|p| scale * p).collect();
    let (top, bottom) = (n as u32, n as u32 + 1);
    let mut tris = Vec::new();
    for k in 0..n as u32 {
        let k1 = (k + 1) % n as u32;
        tris.push([k, k1, top]);
        tris.push([k1, k, bottom]);
    }
    let pose = RigidTransform::from_translation(Vector3::new(rng.range(-0.2, 0.2), rng.range(-0.2, 0.2), rng.range(1.0, 2.0)))
        .compose(&rng.rotation());
    (v, tris, pose)
}

/// SHA-256 over every file under `root`: sorted relative paths and contents.
pub fn tree_hash(root: &Path) -> String {
    fn walk(dir: &Path, out: &mut Vec<std::path::PathBuf>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, out);
            } else {
                out.push(p);
            }
        }
    }
    let mut files = Vec::new();
    walk(root, &mut files);
    files.sort();
    let mut h = Sha256::new();
    for f in files {
        h.update(f.strip_prefix(root).unwrap().to_string_lossy().as_bytes());
        h.update([0]);
        h.update(std::fs::read(&f).unwrap());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
