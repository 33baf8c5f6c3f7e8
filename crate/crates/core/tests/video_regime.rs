mod common;

use augforge_core::backends::{Backend, BackendSet};
use augforge_core::data::{Image, Mask};
use augforge_core::geometry::{forward_kinematics, CameraModel, RigidTransform};
use augforge_core::synthetic::{toy_camera, toy_chain, video_episode};
use augforge_core::video::{
    aggregate_masks, background_candidates, end_effector_pixel, primitive_mesh, robot_mask, robot_mask_inflated,
    seed_object_mask, track_object, TrackEvent,
};
use common::{fk_oracle, random_chain, raycast_depth, scenarios, Rng};
use nalgebra::{Vector3, Vector4};

#[test]
fn end_effector_pixel_matches_composed_oracles() {
    let mut rng = Rng(21);
    let cam = CameraModel::new(200.0, 180.0, 64.0, 48.0, RigidTransform::from_translation(Vector3::new(0.0, 0.0, -4.0))).unwrap();
    let world_to_cam = common::mat4(&cam.pose).try_inverse().unwrap();
    let mut seen = 0;
    for _ in 0..300 {
        let chain = random_chain(&mut rng, 4);
        let q: Vec<f64> = (0..4).map(|_| rng.range(-2.0, 2.0)).collect();
        let (_, ee) = fk_oracle(&chain, &q);
        let c = world_to_cam * Vector4::new(ee[(0, 3)], ee[(1, 3)], ee[(2, 3)], 1.0);
        match end_effector_pixel(&chain, &q, &cam) {
            Ok(p) => {
                assert!((p.u - (200.0 * c.x / c.z + 64.0)).abs() < 1e-9);
                assert!((p.v - (180.0 * c.y / c.z + 48.0)).abs() < 1e-9);
                seen += 1;
            }
            Err(_) => assert!(c.z <= 1e-9),
        }
    }
    assert!(seen > 250);
}

#[test]
fn robot_mask_matches_ray_cast_primitives() {
    let chain = toy_chain();
    let cam = toy_camera(128, 128);
    let mut rng = Rng(8);
    for _ in 0..10 {
        let q = vec![rng.range(-1.0, 1.0), rng.range(-1.5, 1.5)];
        let fk = forward_kinematics(&chain, &q).unwrap();
        let mut oracle = Mask::empty(128, 128);
        for link in &chain.links {
            let (v, t) = primitive_mesh(&link.primitive, 1.0).unwrap();
            for (i, hit) in raycast_depth(&v, &t, &fk.joints[link.joint], &cam, 128, 128).iter().enumerate() {
                if hit.is_some() {
                    oracle.put(i, true);
                }
            }
        }
        let mask = robot_mask_inflated(&chain, &q, &cam, 128, 128, 1.0).unwrap();
        assert!(mask.iou(&oracle) >= 0.98, "iou {}", mask.iou(&oracle));
        // The default inflation only grows the mask.
        let grown = robot_mask(&chain, &q, &cam, 128, 128).unwrap();
        assert!(mask.difference(&grown).is_empty());
        assert!(grown.count() > mask.count());
    }
}

#[test]
fn missing_link_geometry_is_an_error() {
    let mut chain = toy_chain();
    chain.links.retain(|l| l.joint == 0);
    assert!(robot_mask(&chain, &[0.0, 0.0], &toy_camera(32, 32), 32, 32).is_err());
}

fn rect_frames(n: usize, step: u32) -> (Vec<Image>, Vec<Mask>) {
    let truth: Vec<Mask> = (0..n as u32)
        .map(|t| Mask::from_fn(64, 64, |x, y| (10 + step * t..22 + step * t).contains(&x) && (20..32).contains(&y)))
        .collect();
    let images = truth
        .iter()
        .map(|m| Image::from_fn(64, 64, |x, y| if m.get(x, y) { [200, 30, 30] } else { [90, 90, 90] }))
        .collect();
    (images, truth)
}

#[test]
fn tracker_follows_a_moving_rectangle() {
    let (images, truth) = rect_frames(10, 2);
    let refs: Vec<&Image> = images.iter().collect();
    let robot = vec![Mask::empty(64, 64); 10];
    let m = Backend::mock();
    let initial = seed_object_mask(&images[0], (15, 25), &robot[0], &m, 0).unwrap();
    assert_eq!(initial, truth[0]);
    let (masks, events) = track_object(&refs, &robot, &vec![Some((15, 25)); 10], initial, &m, &m).unwrap();
    for (got, want) in masks.iter().zip(&truth) {
        assert!(got.iou(want) >= 0.8);
    }
    assert!(events.is_empty());
}

#[test]
fn static_sequence_keeps_the_initial_mask() {
    let (images, truth) = rect_frames(5, 0);
    let refs: Vec<&Image> = images.iter().collect();
    let robot = vec![Mask::empty(64, 64); 5];
    let m = Backend::mock();
    let (masks, _) = track_object(&refs, &robot, &[None; 5], truth[0].clone(), &m, &m).unwrap();
    assert!(masks.iter().all(|x| *x == truth[0]));
}

#[test]
fn vanished_object_falls_back_then_reseeds() {
    let (mut images, _) = rect_frames(8, 1);
    for img in images.iter_mut().skip(2) {
        *img = Image::filled(64, 64, [90, 90, 90]);
    }
    let refs: Vec<&Image> = images.iter().collect();
    let robot = vec![Mask::empty(64, 64); 8];
    let m = Backend::mock();
    let initial = seed_object_mask(&images[0], (12, 25), &robot[0], &m, 0).unwrap();
    let (_, events) = track_object(&refs, &robot, &vec![Some((12, 25)); 8], initial, &m, &m).unwrap();
    assert!(matches!(events[0], TrackEvent::Fallback { frame: 2 }));
    assert!(events.iter().any(|e| matches!(e, TrackEvent::Reseed { frame: 4, .. })), "{events:?}");
}

#[test]
fn seed_mask_excludes_robot_pixels() {
    let (images, truth) = rect_frames(1, 0);
    let robot = Mask::from_fn(64, 64, |x, _| x >= 16);
    let got = seed_object_mask(&images[0], (12, 25), &robot, &Backend::mock(), 0).unwrap();
    assert_eq!(got, truth[0].difference(&robot));
    let miss = seed_object_mask(&images[0], (50, 50), &Mask::empty(64, 64), &Backend::mock(), 0).unwrap();
    assert!(miss.is_empty());
}

#[test]
fn background_candidates_skip_robot_and_object() {
    let boxes = [(2u32, 2u32), (30, 2), (2, 30)];
    let img = Image::from_fn(64, 64, |x, y| {
        if boxes.iter().any(|&(bx, by)| (bx..bx + 8).contains(&x) && (by..by + 8).contains(&y)) { [10, 200, 10] } else { [0, 0, 0] }
    });
    let robot = Mask::from_fn(64, 64, |x, y| x >= 32 && y < 6);
    let none = Mask::empty(64, 64);
    let c = background_candidates(&img, &robot, &none, &Backend::mock(), 0).unwrap();
    assert_eq!(c.len(), 2);
    assert!(c.iter().all(|m| !m.intersects(&robot)));
    assert_eq!(background_candidates(&img, &none, &none, &Backend::mock(), 0).unwrap().len(), 3);
    let agg = aggregate_masks(64, 64, &c).unwrap();
    assert_eq!(agg.count(), c.iter().map(Mask::count).sum::<usize>());
}

#[test]
fn synthetic_trajectory_meets_video_contracts() {
    for seed in [1, 2, 3] {
        let r = scenarios::video_trajectory(10, 128, seed).unwrap();
        assert!(r.min_truth_iou >= 0.8, "seed {seed}: iou {}", r.min_truth_iou);
        assert!(r.min_step_iou >= 0.5, "seed {seed}: step iou {}", r.min_step_iou);
        assert!(r.fill_consistent && r.robot_preserved && r.payload_preserved);
    }
}

#[test]
fn object_pixels_of_trajectory_are_found_from_the_end_effector() {
    let (ep, truth) = video_episode("t", 3, 128, 128, 5);
    let (masks, _) = augforge_core::video::trajectory_masks(&ep, &toy_chain(), false, &BackendSet::mock()).unwrap();
    assert!(masks[0].object[0].iou(&truth.object[0]) >= 0.8);
    assert!(masks[0].background.iter().all(Vec::is_empty));
}
