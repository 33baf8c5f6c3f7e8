mod common;

use augforge_core::data::{DepthMap, Image, Mask};
use augforge_core::geometry::{
    composite_depth, forward_kinematics, project_point, project_topdown, render_triangles, topdown_pixel_to_world,
    CameraModel, RigidTransform, Workspace,
};
use augforge_core::synthetic::{prism, render_scene, toy_camera, SceneItem};
use common::{fk_oracle, mat4, random_chain, random_convex_mesh, raycast_depth, Rng};
use nalgebra::{Vector3, Vector4};
use proptest::prelude::*;

#[test]
fn fk_matches_matrix_product_oracle() {
    let mut rng = Rng(17);
    for _ in 0..200 {
        let chain = random_chain(&mut rng, 6);
        let q: Vec<f64> = (0..6).map(|_| rng.range(-3.0, 3.0)).collect();
        let fk = forward_kinematics(&chain, &q).unwrap();
        let (frames, ee) = fk_oracle(&chain, &q);
        for (got, want) in fk.joints.iter().zip(&frames) {
            assert!((mat4(got) - want).norm() < 1e-9);
        }
        assert!((mat4(&fk.end_effector) - ee).norm() < 1e-9);
    }
}

#[test]
fn fk_of_concatenated_chains_composes() {
    let mut rng = Rng(3);
    for _ in 0..100 {
        let a = random_chain(&mut rng, 3);
        let b = random_chain(&mut rng, 2);
        let qa: Vec<f64> = (0..3).map(|_| rng.range(-2.0, 2.0)).collect();
        let qb: Vec<f64> = (0..2).map(|_| rng.range(-2.0, 2.0)).collect();
        let joint = a.concat(&b);
        let q: Vec<f64> = qa.iter().chain(&qb).copied().collect();
        let whole = forward_kinematics(&joint, &q).unwrap().end_effector;
        let split = forward_kinematics(&a, &qa).unwrap().end_effector.compose(&forward_kinematics(&b, &qb).unwrap().end_effector);
        assert!((mat4(&whole) - mat4(&split)).norm() < 1e-9);
    }
}

#[test]
fn projection_matches_matrix_oracle() {
    let pose = RigidTransform::from_translation(Vector3::new(0.3, -0.2, 0.5))
        .compose(&RigidTransform::from_axis_angle(&Vector3::y(), std::f64::consts::FRAC_PI_2));
    let cam = CameraModel::new(120.0, 110.0, 64.0, 60.0, pose).unwrap();
    let k = nalgebra::Matrix3x4::new(120.0, 0.0, 64.0, 0.0, 0.0, 110.0, 60.0, 0.0, 0.0, 0.0, 1.0, 0.0);
    let world_to_cam = mat4(&pose).try_inverse().unwrap();
    let mut rng = Rng(5);
    let mut checked = 0;
    for _ in 0..1000 {
        let p = Vector3::new(rng.range(-2.0, 3.0), rng.range(-2.0, 2.0), rng.range(-2.0, 2.0));
        let h = k * world_to_cam * Vector4::new(p.x, p.y, p.z, 1.0);
        match project_point(&cam, &p) {
            Ok(proj) => {
                assert!((proj.u - h.x / h.z).abs() < 1e-9 && (proj.v - h.y / h.z).abs() < 1e-9);
                assert!((proj.depth - h.z).abs() < 1e-9);
                assert!((cam.unproject(proj.u, proj.v, proj.depth) - p).norm() < 1e-9);
                checked += 1;
            }
            Err(_) => assert!(h.z <= 1e-9),
        }
    }
    assert!(checked > 100);
}

#[test]
fn rasterizer_matches_ray_casting_on_convex_meshes() {
    let cam = CameraModel::new(60.0, 60.0, 32.0, 32.0, RigidTransform::identity()).unwrap();
    let mut rng = Rng(99);
    for _ in 0..40 {
        let (v, t, pose) = random_convex_mesh(&mut rng);
        let (depth, mask) = render_triangles(&v, &t, &pose, &cam, 64, 64);
        let oracle = raycast_depth(&v, &t, &pose, &cam, 64, 64);
        let mut disagree = 0;
        for (i, o) in oracle.iter().enumerate() {
            match (mask.at(i), o) {
                (true, Some(z)) => assert!((depth.values()[i] as f64 - z).abs() <= 1e-4),
                (false, None) => {}
                _ => disagree += 1,
            }
        }
        assert!(disagree <= 2, "{disagree} coverage disagreements");
    }
}

#[test]
fn topdown_cube_reports_its_height() {
    let cam = toy_camera(128, 128);
    let cube = prism("cube", 4, 0.1 * std::f64::consts::SQRT_2, 0.1);
    let scene = render_scene(&[SceneItem::mesh(&cube, RigidTransform::identity(), [255, 0, 0])], &cam, 128, 128);
    let ws = Workspace { x_range: [-0.3, 0.3], y_range: [-0.3, 0.3], table_height: 0.0, topdown_resolution: 0.01 };
    let td = project_topdown(&scene.rgb, &scene.depth, &cam, &ws).unwrap();
    let (gw, gh) = ws.grid_dims();
    for row in 0..gh {
        for col in 0..gw {
            let Some(hgt) = td.heightmap.get(col, row) else { continue };
            let (x, y) = ws.cell_center(col, row);
            let inside = x.abs() < 0.1 - 0.015 && y.abs() < 0.1 - 0.015;
            let outside = x.abs() > 0.1 + 0.015 || y.abs() > 0.1 + 0.015;
            if inside {
                assert!((hgt - 0.1).abs() <= 0.002, "cell ({col},{row}) height {hgt}");
            } else if outside {
                assert!(hgt.abs() <= 0.002, "cell ({col},{row}) height {hgt}");
            }
        }
    }
    // Round trip of the cube's top centre through the grid.
    let (c, r) = ws.cell_of(0.0, 0.0).unwrap();
    let w = topdown_pixel_to_world(c as i64, r as i64, &td.heightmap, &ws).unwrap();
    assert!((w - Vector3::new(0.0, 0.0, 0.1)).norm() <= 0.01 * std::f64::consts::SQRT_2 + 0.002);
}

#[test]
fn topdown_of_invalid_depth_is_empty() {
    let cam = toy_camera(32, 32);
    let ws = Workspace { x_range: [-0.3, 0.3], y_range: [-0.3, 0.3], table_height: 0.0, topdown_resolution: 0.01 };
    let td = project_topdown(&Image::filled(32, 32, [1, 2, 3]), &DepthMap::invalid(32, 32), &cam, &ws).unwrap();
    assert_eq!(td.heightmap.covered(), 0);
    assert!(!td.warnings.is_empty());
}

proptest! {
    #[test]
    fn composite_matches_pixel_loop(bits in proptest::collection::vec(any::<bool>(), 64), seed in any::<u64>()) {
        let mut rng = Rng(seed);
        let base = DepthMap::from_fn(8, 8, |_, _| rng.range(0.1, 3.0) as f32);
        let rendered = DepthMap::from_fn(8, 8, |_, _| rng.range(0.1, 3.0) as f32);
        let mask = Mask::from_bits(8, 8, bits.clone()).unwrap();
        let out = composite_depth(&base, &rendered, &mask).unwrap();
        for i in 0..64 {
            let want = if bits[i] { rendered.values()[i] } else { base.values()[i] };
            prop_assert_eq!(out.values()[i].to_bits(), want.to_bits());
        }
        prop_assert!(composite_depth(&out, &rendered, &mask).unwrap().bit_eq(&out));
    }

    #[test]
    fn back_projection_recovers_visible_points(x in -1.0f64..1.0, y in -1.0f64..1.0, z in 0.2f64..5.0, yaw in -3.0f64..3.0) {
        let pose = RigidTransform::from_translation(Vector3::new(0.1, 0.2, -0.3))
            .compose(&RigidTransform::from_axis_angle(&Vector3::z(), yaw));
        let cam = CameraModel::new(200.0, 180.0, 50.0, 40.0, pose).unwrap();
        let p = pose.transform_point(&Vector3::new(x, y, z));
        let proj = project_point(&cam, &p).unwrap();
        prop_assert!((cam.unproject(proj.u, proj.v, proj.depth) - p).norm() < 1e-9);
    }
}
