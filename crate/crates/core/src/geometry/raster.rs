//! Z-buffer rasterization of triangle meshes into depth and coverage.
//!
//! A pixel `(x, y)` is sampled at its center `(x + 0.5, y + 0.5)`. Ties on shared edges go to
//! the top/left edge so that a pixel on an edge shared by two triangles is covered exactly once.
//! Depth is interpolated perspective-correctly (linear in `1/z` across the screen).

use nalgebra::{Vector2, Vector3};

use super::{CameraModel, GeometryError, RigidTransform};
use crate::data::{DepthMap, Mask, MeshAsset};

/// Camera-frame z below which geometry is clipped away.
pub const NEAR_PLANE: f64 = 1e-4;

struct ScreenVertex {
    p: Vector2<f64>,
    inv_z: f64,
}

#[inline]
fn edge(a: &Vector2<f64>, b: &Vector2<f64>, p: &Vector2<f64>) -> f64 {
    // Evaluate from the lexicographically smaller endpoint so a shared edge gives exactly
    // opposite values in its two triangles; otherwise rounding can drop pixels on the seam.
    if (a.x, a.y) <= (b.x, b.y) {
        (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
    } else {
        -((a.x - b.x) * (p.y - b.y) - (a.y - b.y) * (p.x - b.x))
    }
}

#[inline]
fn owns_ties(a: &Vector2<f64>, b: &Vector2<f64>) -> bool {
    let d = b - a;
    d.y < 0.0 || (d.y == 0.0 && d.x > 0.0)
}

/// Sutherland–Hodgman clip of a camera-frame polygon against `z >= NEAR_PLANE`.
fn clip_near(poly: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let a_in = a.z >= NEAR_PLANE;
        let b_in = b.z >= NEAR_PLANE;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            let t = (NEAR_PLANE - a.z) / (b.z - a.z);
            let mut p = a + (b - a) * t;
            p.z = NEAR_PLANE;
            out.push(p);
        }
    }
    out
}

fn raster_triangle(v: [&ScreenVertex; 3], zbuf: &mut [f64], width: u32, height: u32) {
    let (a, mut b, mut c) = (v[0], v[1], v[2]);
    let mut area = edge(&a.p, &b.p, &c.p);
    if area == 0.0 || !area.is_finite() {
        return;
    }
    if area < 0.0 {
        std::mem::swap(&mut b, &mut c);
        area = -area;
    }
    let min_x = a.p.x.min(b.p.x).min(c.p.x);
    let max_x = a.p.x.max(b.p.x).max(c.p.x);
    let min_y = a.p.y.min(b.p.y).min(c.p.y);
    let max_y = a.p.y.max(b.p.y).max(c.p.y);
    // Pixel x is sampled at x + 0.5.
    let x0 = (min_x - 0.5).ceil().max(0.0);
    let x1 = (max_x - 0.5).floor().min(width as f64 - 1.0);
    let y0 = (min_y - 0.5).ceil().max(0.0);
    let y1 = (max_y - 0.5).floor().min(height as f64 - 1.0);
    if x0 > x1 || y0 > y1 {
        return;
    }
    let (x0, x1, y0, y1) = (x0 as u32, x1 as u32, y0 as u32, y1 as u32);
    let tie_a = owns_ties(&b.p, &c.p);
    let tie_b = owns_ties(&c.p, &a.p);
    let tie_c = owns_ties(&a.p, &b.p);
    let inside = |w: f64, tie: bool| w > 0.0 || (w == 0.0 && tie);
    for y in y0..=y1 {
        let py = y as f64 + 0.5;
        for x in x0..=x1 {
            let p = Vector2::new(x as f64 + 0.5, py);
            let wa = edge(&b.p, &c.p, &p);
            let wb = edge(&c.p, &a.p, &p);
            let wc = edge(&a.p, &b.p, &p);
            if !(inside(wa, tie_a) && inside(wb, tie_b) && inside(wc, tie_c)) {
                continue;
            }
            let inv_z = (wa * a.inv_z + wb * b.inv_z + wc * c.inv_z) / area;
            if inv_z <= 0.0 {
                continue;
            }
            let z = 1.0 / inv_z;
            let slot = &mut zbuf[y as usize * width as usize + x as usize];
            if z < *slot {
                *slot = z;
            }
        }
    }
}

/// Rasterizes world-space triangles seen by `camera`. No back-face culling.
pub fn render_triangles(
    vertices: &[Vector3<f64>],
    triangles: &[[u32; 3]],
    model_to_world: &RigidTransform,
    camera: &CameraModel,
    width: u32,
    height: u32,
) -> (DepthMap, Mask) {
    let to_cam = camera.world_to_camera().compose(model_to_world);
    let cam_pts: Vec<Vector3<f64>> = vertices.iter().map(|v| to_cam.transform_point(v)).collect();
    let mut zbuf = vec![f64::INFINITY; width as usize * height as usize];
    let project = |p: &Vector3<f64>| ScreenVertex {
        p: Vector2::new(camera.fx * p.x / p.z + camera.cx, camera.fy * p.y / p.z + camera.cy),
        inv_z: 1.0 / p.z,
    };
    for tri in triangles {
        let pts = [cam_pts[tri[0] as usize], cam_pts[tri[1] as usize], cam_pts[tri[2] as usize]];
        if pts.iter().all(|p| p.z >= NEAR_PLANE) {
            let s = pts.map(|p| project(&p));
            raster_triangle([&s[0], &s[1], &s[2]], &mut zbuf, width, height);
        } else if pts.iter().any(|p| p.z >= NEAR_PLANE) {
            let poly: Vec<ScreenVertex> = clip_near(&pts).iter().map(project).collect();
            for k in 1..poly.len().saturating_sub(1) {
                raster_triangle([&poly[0], &poly[k], &poly[k + 1]], &mut zbuf, width, height);
            }
        }
    }
    let mut depth = DepthMap::invalid(width, height);
    let mut mask = Mask::empty(width, height);
    for (i, &z) in zbuf.iter().enumerate() {
        if z.is_finite() {
            depth.values_mut()[i] = z as f32;
            mask.put(i, true);
        }
    }
    (depth, mask)
}

/// Depth of the nearest surface of `mesh` placed at `pose`, and its coverage mask.
pub fn render_mesh_depth(
    mesh: &MeshAsset,
    pose: &RigidTransform,
    camera: &CameraModel,
    width: u32,
    height: u32,
) -> (DepthMap, Mask) {
    render_triangles(&mesh.vertices, &mesh.triangles, pose, camera, width, height)
}

/// `rendered` inside `mask`, `base` elsewhere.
pub fn composite_depth(base: &DepthMap, rendered: &DepthMap, mask: &Mask) -> Result<DepthMap, GeometryError> {
    if base.dims() != rendered.dims() || base.dims() != mask.dims() {
        return Err(GeometryError::DimensionMismatch(format!(
            "base {:?}, rendered {:?}, mask {:?}",
            base.dims(),
            rendered.dims(),
            mask.dims()
        )));
    }
    let mut out = base.clone();
    for (i, (o, &r)) in out.values_mut().iter_mut().zip(rendered.values()).enumerate() {
        if mask.at(i) {
            *o = r;
        }
    }
    Ok(out)
}
