use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Vector3;

use crate::data::Mask;
use crate::geometry::{
    forward_kinematics, render_triangles, CameraModel, GeometryError, KinematicChain, LinkPrimitive, Projection,
    RigidTransform,
};
use crate::structured::AugmentError;

/// Segments around a capsule's axis.
pub const CAPSULE_SEGMENTS: usize = 10;
/// Latitude rings per hemispherical cap (the equator ring included).
pub const CAPSULE_RINGS: usize = 3;
/// Link primitives are grown by this factor so the mask errs large.
pub const LINK_INFLATION: f64 = 1.1;

/// Pixel of the FK end effector in `camera`.
pub fn end_effector_pixel(
    chain: &KinematicChain,
    joints: &[f64],
    camera: &CameraModel,
) -> Result<Projection, GeometryError> {
    let fk = forward_kinematics(chain, joints)?;
    camera.project_point(&fk.end_effector.translation)
}

/// Triangulated capsule around segment `a`–`b`: a cylinder plus two hemispherical caps,
/// `2S + 2(S(R-1)·2 + S)` triangles (120 with the defaults).
///
/// Ring radii are scaled by `2 / (1 + cos(π/S))`, which puts the polygon halfway between
/// inscribed and circumscribed so the silhouette area matches the true circle closely.
pub fn capsule_mesh(radius: f64, a: &Vector3<f64>, b: &Vector3<f64>) -> (Vec<Vector3<f64>>, Vec<[u32; 3]>) {
    let (s, r) = (CAPSULE_SEGMENTS, CAPSULE_RINGS);
    let axis = b - a;
    let d = if axis.norm() > 1e-12 { axis.normalize() } else { Vector3::z() };
    let helper = if d.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let u = d.cross(&helper).normalize();
    let v = d.cross(&u);
    let poly = 2.0 / (1.0 + (PI / s as f64).cos());

    let mut verts = Vec::with_capacity(2 * (s * r + 1));
    // Cap at b points along +d, cap at a along -d. Ring 0 is the equator of each cap.
    for (centre, dir) in [(*b, d), (*a, -d)] {
        for k in 0..r {
            let phi = k as f64 * FRAC_PI_2 / r as f64;
            let ring = radius * phi.cos() * poly;
            let lift = radius * phi.sin();
            for j in 0..s {
                let t = j as f64 * TAU / s as f64;
                verts.push(centre + dir * lift + (u * t.cos() + v * t.sin()) * ring);
            }
        }
        verts.push(centre + dir * radius);
    }
    let per_cap = (s * r + 1) as u32;
    let ring = |cap: u32, k: usize, j: usize| cap * per_cap + (k * s + j % s) as u32;
    let mut tris = Vec::new();
    for j in 0..s {
        // Cylinder between the two equators.
        tris.push([ring(0, 0, j), ring(1, 0, j), ring(1, 0, j + 1)]);
        tris.push([ring(0, 0, j), ring(1, 0, j + 1), ring(0, 0, j + 1)]);
    }
    for cap in 0..2u32 {
        for k in 0..r - 1 {
            for j in 0..s {
                tris.push([ring(cap, k, j), ring(cap, k + 1, j), ring(cap, k + 1, j + 1)]);
                tris.push([ring(cap, k, j), ring(cap, k + 1, j + 1), ring(cap, k, j + 1)]);
            }
        }
        let pole = cap * per_cap + (s * r) as u32;
        for j in 0..s {
            tris.push([ring(cap, r - 1, j), pole, ring(cap, r - 1, j + 1)]);
        }
    }
    (verts, tris)
}

/// Box of `half_extents` centred at the origin of `pose`.
pub fn box_mesh(half_extents: &[f64; 3], pose: &RigidTransform) -> (Vec<Vector3<f64>>, Vec<[u32; 3]>) {
    let [hx, hy, hz] = *half_extents;
    let verts = (0..8)
        .map(|i| {
            let p = Vector3::new(
                if i & 1 == 0 { -hx } else { hx },
                if i & 2 == 0 { -hy } else { hy },
                if i & 4 == 0 { -hz } else { hz },
            );
            pose.transform_point(&p)
        })
        .collect();
    let tris = vec![
        [0, 2, 1], [1, 2, 3], // -z
        [4, 5, 6], [5, 7, 6], // +z
        [0, 1, 4], [1, 5, 4], // -y
        [2, 6, 3], [3, 6, 7], // +y
        [0, 4, 2], [2, 4, 6], // -x
        [1, 3, 5], [3, 7, 5], // +x
    ];
    (verts, tris)
}

/// Triangles of one primitive in its joint frame, grown by `inflation`.
pub fn primitive_mesh(primitive: &LinkPrimitive, inflation: f64) -> Result<(Vec<Vector3<f64>>, Vec<[u32; 3]>), GeometryError> {
    Ok(match primitive {
        LinkPrimitive::Capsule { radius, a, b } => {
            capsule_mesh(radius * inflation, &Vector3::from(*a), &Vector3::from(*b))
        }
        LinkPrimitive::Box { half_extents, pose } => {
            let pose = RigidTransform::from_row_major(pose)?;
            box_mesh(&half_extents.map(|h| h * inflation), &pose)
        }
    })
}

/// Union of the rasterized link primitives posed by FK, grown by `inflation`.
///
/// Every joint must carry at least one primitive.
pub fn robot_mask_inflated(
    chain: &KinematicChain,
    joints: &[f64],
    camera: &CameraModel,
    width: u32,
    height: u32,
    inflation: f64,
) -> Result<Mask, AugmentError> {
    chain.check()?;
    if let Some(j) = (0..chain.dof()).find(|&j| !chain.links.iter().any(|l| l.joint == j)) {
        return Err(AugmentError::Config(format!("chain {}: joint {j} has no link geometry", chain.name)));
    }
    let fk = forward_kinematics(chain, joints)?;
    let mut mask = Mask::empty(width, height);
    for link in &chain.links {
        let (verts, tris) = primitive_mesh(&link.primitive, inflation)?;
        let (_, m) = render_triangles(&verts, &tris, &fk.joints[link.joint], camera, width, height);
        mask = mask.union(&m);
    }
    Ok(mask)
}

/// Robot silhouette with the default [`LINK_INFLATION`].
pub fn robot_mask(
    chain: &KinematicChain,
    joints: &[f64],
    camera: &CameraModel,
    width: u32,
    height: u32,
) -> Result<Mask, AugmentError> {
    robot_mask_inflated(chain, joints, camera, width, height, LINK_INFLATION)
}
