//! Procedural toy tabletop datasets for tests, demos and benchmarks.
//!
//! Scenes are seen by a camera one meter above the table looking straight down. Objects are
//! solid-colored meshes on a uniform table, so mock segmentation recovers them exactly. All
//! randomness comes from the seed passed in.

use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::data::{
    encode_mask_png, encode_rgb_png, save_episode, save_manifest, save_mesh_catalog, DataError, DatasetManifest,
    DepthMap, Episode, EpisodeEntry, Frame, Image, Mask, MeshAsset, MeshCatalog, NamedCamera, Role, View,
};
use crate::geometry::{
    render_triangles, CameraModel, Joint, JointKind, KinematicChain, LinkGeometry, LinkPrimitive, RigidTransform,
    Workspace,
};
use crate::video::primitive_mesh;
use crate::{sub_seed, unit_f64};

pub const CAMERA_HEIGHT: f64 = 1.0;
pub const TOY_CHAIN: &str = "toy_arm";
pub const PRIMARY_CAMERA: &str = "top";
const TABLE_COLOR: [u8; 3] = [196, 188, 172];
const ROBOT_COLOR: [u8; 3] = [48, 48, 56];
const ACTION_WIDTH: usize = 7;

/// Arm geometry: base height, link lengths and the unmodelled finger length between the last
/// link primitive and the end effector.
const ARM_BASE: [f64; 3] = [-0.55, 0.0, 0.15];
const LINK_1: f64 = 0.4;
const LINK_2: f64 = 0.35;
const FINGER_GAP: f64 = 0.14;
const EE_DROP: f64 = 0.1;

fn rand(seed: u64, tag: &str) -> f64 {
    unit_f64(sub_seed(seed, tag))
}

fn uniform(seed: u64, tag: &str, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rand(seed, tag)
}

/// Downward-looking camera centred over the table; image x runs along world x, image y along -y.
pub fn toy_camera(width: u32, height: u32) -> CameraModel {
    let rotation = Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0);
    let pose = RigidTransform::new(rotation, Vector3::new(0.0, 0.0, CAMERA_HEIGHT)).expect("proper rotation");
    let f = 0.9 * width as f64;
    CameraModel::new(f, f, width as f64 / 2.0, height as f64 / 2.0, pose).expect("valid intrinsics")
}

pub fn toy_workspace() -> Workspace {
    Workspace { x_range: [-0.4, 0.4], y_range: [-0.4, 0.4], table_height: 0.0, topdown_resolution: 0.01 }
}

/// Planar two-link arm hovering over the table. Joint 0 sits at the base, joint 1 at the end of
/// link 1; the end effector reaches down to just above the table past the last capsule.
pub fn toy_chain() -> KinematicChain {
    let base = RigidTransform::from_translation(Vector3::from(ARM_BASE));
    let elbow = RigidTransform::from_translation(Vector3::new(LINK_1, 0.0, 0.0));
    let limits = [-PI, PI];
    let joints = vec![
        Joint { origin: base, axis: Vector3::z(), kind: JointKind::Revolute, limits },
        Joint { origin: elbow, axis: Vector3::z(), kind: JointKind::Revolute, limits },
    ];
    let ee = RigidTransform::from_translation(Vector3::new(LINK_2, 0.0, -EE_DROP));
    let mut chain = KinematicChain::new(TOY_CHAIN, joints, ee).expect("toy chain is valid");
    chain.links = vec![
        LinkGeometry { joint: 0, primitive: LinkPrimitive::Capsule { radius: 0.03, a: [0.0; 3], b: [LINK_1, 0.0, 0.0] } },
        LinkGeometry {
            joint: 1,
            primitive: LinkPrimitive::Capsule { radius: 0.025, a: [0.0; 3], b: [LINK_2 - FINGER_GAP, 0.0, 0.0] },
        },
    ];
    chain
}

/// Prism with `sides` faces (4 gives a square block), base centred on the origin at z = 0.
pub fn prism(name: &str, sides: usize, radius: f64, height: f64) -> MeshAsset {
    let mut vertices = Vec::with_capacity(2 * sides + 2);
    for z in [0.0, height] {
        for k in 0..sides {
            let t = TAU * k as f64 / sides as f64 + PI / sides as f64;
            vertices.push(Vector3::new(radius * t.cos(), radius * t.sin(), z));
        }
    }
    vertices.push(Vector3::new(0.0, 0.0, 0.0));
    vertices.push(Vector3::new(0.0, 0.0, height));
    let n = sides as u32;
    let (bottom, top) = (2 * n, 2 * n + 1);
    let mut triangles = Vec::new();
    for k in 0..n {
        let k1 = (k + 1) % n;
        triangles.push([k, k1, n + k1]);
        triangles.push([k, n + k1, n + k]);
        triangles.push([bottom, k1, k]);
        triangles.push([top, n + k, n + k1]);
    }
    MeshAsset::new(name, vertices, triangles).expect("prism is valid")
}

const OBJECT_NOUNS: [&str; 11] =
    ["apple", "banana", "mug", "can", "block", "pear", "lemon", "cube", "bottle", "toy car", "ball"];
const RECEPTACLE_NOUNS: [&str; 12] =
    ["plate", "bowl", "tray", "basket", "box", "pan", "crate", "bin", "dish", "pot", "mat", "drawer"];
const DISTRACTOR_NOUNS: [&str; 17] = [
    "stapler", "sponge", "remote", "cup", "book", "candle", "glasses case", "marker", "phone", "wallet", "tape",
    "scissors", "clock", "vase", "jar", "toy duck", "brush",
];

/// Forty procedurally shaped meshes: 11 objects, 12 receptacles and 17 distractors.
pub fn mesh_catalog(seed: u64) -> MeshCatalog {
    let mut assets = Vec::new();
    let groups: [(&[&str], Role, [f64; 2], [f64; 2]); 3] = [
        (&OBJECT_NOUNS, Role::Object, [0.05, 0.08], [0.06, 0.12]),
        (&RECEPTACLE_NOUNS, Role::Receptacle, [0.09, 0.13], [0.02, 0.05]),
        (&DISTRACTOR_NOUNS, Role::Distractor, [0.03, 0.06], [0.04, 0.1]),
    ];
    for (nouns, role, r, h) in groups {
        for (i, noun) in nouns.iter().enumerate() {
            let s = sub_seed(seed, &format!("mesh/{noun}"));
            let sides = [3, 4, 5, 6, 8][i % 5];
            let name = format!("{}.obj", noun.replace(' ', "_"));
            let mut asset = prism(&name, sides, uniform(s, "r", r[0], r[1]), uniform(s, "h", h[0], h[1]));
            asset.category = noun.to_string();
            asset.prompt_noun = noun.to_string();
            asset.role_tags = BTreeSet::from([role]);
            assets.push(asset);
        }
    }
    MeshCatalog { assets }
}

/// One solid-colored mesh in a rendered scene.
#[derive(Clone, Debug)]
pub struct SceneItem {
    pub vertices: Vec<Vector3<f64>>,
    pub triangles: Vec<[u32; 3]>,
    pub pose: RigidTransform,
    pub color: [u8; 3],
}

impl SceneItem {
    pub fn mesh(mesh: &MeshAsset, pose: RigidTransform, color: [u8; 3]) -> Self {
        Self { vertices: mesh.vertices.clone(), triangles: mesh.triangles.clone(), pose, color }
    }
}

#[derive(Clone, Debug)]
pub struct RenderedScene {
    pub rgb: Image,
    /// Quantized to millimeters, so it survives a save/load round trip unchanged.
    pub depth: DepthMap,
    /// Visible pixels of each item, parallel to the input list.
    pub visible: Vec<Mask>,
}

/// Z-buffers the items over an infinite table at z = 0.
pub fn render_scene(items: &[SceneItem], camera: &CameraModel, width: u32, height: u32) -> RenderedScene {
    let table = [
        Vector3::new(-10.0, -10.0, 0.0),
        Vector3::new(10.0, -10.0, 0.0),
        Vector3::new(10.0, 10.0, 0.0),
        Vector3::new(-10.0, 10.0, 0.0),
    ];
    let (table_depth, _) =
        render_triangles(&table, &[[0, 1, 2], [0, 2, 3]], &RigidTransform::identity(), camera, width, height);
    let renders: Vec<(DepthMap, Mask)> = items
        .iter()
        .map(|it| render_triangles(&it.vertices, &it.triangles, &it.pose, camera, width, height))
        .collect();
    let mut rgb = Image::filled(width, height, TABLE_COLOR);
    let mut depth = table_depth;
    let mut visible = vec![Mask::empty(width, height); items.len()];
    for i in 0..rgb.pixel_count() {
        let mut best: Option<(usize, f32)> = None;
        for (k, (d, m)) in renders.iter().enumerate() {
            if m.at(i) && best.is_none_or(|(_, z)| d.values()[i] < z) {
                best = Some((k, d.values()[i]));
            }
        }
        if let Some((k, z)) = best {
            rgb.put(i, items[k].color);
            depth.values_mut()[i] = z;
            visible[k].put(i, true);
        }
    }
    let depth = depth.quantized().expect("toy depths fit in 16-bit millimeters");
    RenderedScene { rgb, depth, visible }
}

fn palette(seed: u64, tag: &str) -> [u8; 3] {
    // Saturated colors well away from the table color.
    let h = rand(seed, tag) * 6.0;
    let (i, f) = (h.floor() as usize % 6, h.fract());
    let (hi, lo, mid_up, mid_down) = (230.0, 30.0, 30.0 + 200.0 * f, 230.0 - 200.0 * f);
    let c = match i {
        0 => [hi, mid_up, lo],
        1 => [mid_down, hi, lo],
        2 => [lo, hi, mid_up],
        3 => [lo, mid_down, hi],
        4 => [mid_up, lo, hi],
        _ => [hi, lo, mid_down],
    };
    c.map(|v| v.round() as u8)
}

fn actions(seed: u64, frame: usize) -> Vec<f64> {
    (0..ACTION_WIDTH).map(|k| uniform(seed, &format!("action/{frame}/{k}"), -1.0, 1.0)).collect()
}

fn base_frame(rgb: Image, depth: DepthMap, seed: u64, t: usize, joints: Vec<f64>) -> Frame {
    Frame {
        views: vec![View { rgb, depth: Some(depth) }],
        joints,
        gripper: rand(seed, &format!("gripper/{t}")),
        action: actions(seed, t),
    }
}

fn named_camera(width: u32, height: u32) -> NamedCamera {
    NamedCamera { name: PRIMARY_CAMERA.into(), width, height, model: toy_camera(width, height) }
}

const OBJECT_LABELS: [&str; 4] = ["the apple", "the banana", "the mug", "the block"];
const RECEPTACLE_LABELS: [&str; 4] = ["a box", "a plate", "a bowl", "a tray"];

/// A pick-and-place observation: one object and one receptacle on the table, annotated with
/// frame-0 masks and labels. Later frames repeat the observation with new joints and actions.
pub fn tabletop_episode(id: &str, frames: usize, width: u32, height: u32, seed: u64) -> Episode {
    let camera = toy_camera(width, height);
    let object = prism("object", 4, uniform(seed, "object/r", 0.07, 0.1), uniform(seed, "object/h", 0.06, 0.12));
    let receptacle =
        prism("receptacle", 4, uniform(seed, "receptacle/r", 0.11, 0.15), uniform(seed, "receptacle/h", 0.02, 0.05));
    let object_xy = [uniform(seed, "object/x", -0.22, 0.0), uniform(seed, "object/y", -0.2, 0.2)];
    let receptacle_xy = [uniform(seed, "receptacle/x", 0.12, 0.25), uniform(seed, "receptacle/y", -0.2, 0.2)];
    let place = |xy: [f64; 2], tag: &str| {
        RigidTransform::from_translation(Vector3::new(xy[0], xy[1], 0.0))
            .compose(&RigidTransform::from_axis_angle(&Vector3::z(), rand(seed, tag) * PI / 2.0))
    };
    let items = [
        SceneItem::mesh(&object, place(object_xy, "object/yaw"), palette(seed, "object/color")),
        SceneItem::mesh(&receptacle, place(receptacle_xy, "receptacle/yaw"), palette(seed, "receptacle/color")),
    ];
    let scene = render_scene(&items, &camera, width, height);
    let object_label = OBJECT_LABELS[(sub_seed(seed, "object/label") % 4) as usize];
    let receptacle_label = RECEPTACLE_LABELS[(sub_seed(seed, "receptacle/label") % 4) as usize];
    let frames = (0..frames.max(1))
        .map(|t| {
            let joints = vec![0.1 * t as f64, -0.05 * t as f64];
            base_frame(scene.rgb.clone(), scene.depth.clone(), seed, t, joints)
        })
        .collect();
    Episode {
        id: id.into(),
        frames,
        task_text: format!("Put {object_label} in {receptacle_label}"),
        object_label: object_label.into(),
        receptacle_label: receptacle_label.into(),
        object_mask: Some(scene.visible[0].clone()),
        receptacle_mask: Some(scene.visible[1].clone()),
        chain_ref: TOY_CHAIN.into(),
        cameras: vec![named_camera(width, height)],
    }
}

/// Ground truth of a synthetic trajectory.
#[derive(Clone, Debug)]
pub struct VideoTruth {
    /// Visible pixels of the manipulated object per frame.
    pub object: Vec<Mask>,
    /// Visible pixels of the (uninflated) robot per frame.
    pub robot: Vec<Mask>,
}

/// The toy arm pushing a block across the table, with static clutter along the far edges.
///
/// The block follows the end effector, moving about two pixels per frame at 128×128.
pub fn video_episode(id: &str, frames: usize, width: u32, height: u32, seed: u64) -> (Episode, VideoTruth) {
    let camera = toy_camera(width, height);
    let chain = toy_chain();
    let block = prism("block", 4, 0.04 * std::f64::consts::SQRT_2, 0.1);
    let block_color = palette(seed, "block/color");
    let clutter: Vec<SceneItem> = (0..3)
        .map(|k| {
            let side = if k % 2 == 0 { 1.0 } else { -1.0 };
            let x = -0.25 + 0.25 * k as f64 + uniform(seed, &format!("clutter/{k}/x"), -0.04, 0.04);
            let y = side * uniform(seed, &format!("clutter/{k}/y"), 0.35, 0.4);
            let mesh = prism("clutter", 3 + k, uniform(seed, &format!("clutter/{k}/r"), 0.03, 0.05), 0.05);
            SceneItem::mesh(
                &mesh,
                RigidTransform::from_translation(Vector3::new(x, y, 0.0)),
                palette(seed, &format!("clutter/{k}/color")),
            )
        })
        .collect();
    // The sweep is centred on the middle frame and bounded so the block never reaches the
    // clutter band; touching segments would merge under the mock segmenter.
    let q0_mid = uniform(seed, "q0", -0.1, 0.1);
    let q1 = uniform(seed, "q1", -0.15, 0.15);
    let step = 0.025_f64.min(0.25 / frames.max(1) as f64);
    let sweep = if rand(seed, "direction") < 0.5 { step } else { -step };
    let mid = (frames.max(1) - 1) as f64 / 2.0;

    let mut out_frames = Vec::new();
    let mut truth = VideoTruth { object: Vec::new(), robot: Vec::new() };
    for t in 0..frames.max(1) {
        let k = t as f64 - mid;
        let q = vec![q0_mid + sweep * k, q1 - 0.5 * sweep * k];
        let fk = crate::geometry::forward_kinematics(&chain, &q).expect("joint count matches");
        let ee = fk.end_effector.translation;
        let mut items = clutter.clone();
        items.push(SceneItem::mesh(&block, RigidTransform::from_translation(Vector3::new(ee.x, ee.y, 0.0)), block_color));
        let n_static = items.len();
        for link in &chain.links {
            let (vertices, triangles) = primitive_mesh(&link.primitive, 1.0).expect("toy links are valid");
            items.push(SceneItem { vertices, triangles, pose: fk.joints[link.joint], color: ROBOT_COLOR });
        }
        let scene = render_scene(&items, &camera, width, height);
        truth.object.push(scene.visible[n_static - 1].clone());
        truth.robot.push(scene.visible[n_static..].iter().fold(Mask::empty(width, height), |a, m| a.union(m)));
        out_frames.push(base_frame(scene.rgb, scene.depth, seed, t, q));
    }
    let episode = Episode {
        id: id.into(),
        frames: out_frames,
        task_text: "Push the block to the left".into(),
        object_label: "the block".into(),
        receptacle_label: String::new(),
        object_mask: None,
        receptacle_mask: None,
        chain_ref: TOY_CHAIN.into(),
        cameras: vec![named_camera(width, height)],
    };
    (episode, truth)
}

/// Writes episodes, the toy chain, the mesh catalog and a manifest under `root`.
pub fn write_dataset(
    root: &Path,
    dataset_id: &str,
    episodes: &[Episode],
    catalog: Option<&MeshCatalog>,
) -> Result<DatasetManifest, DataError> {
    let mut manifest = DatasetManifest::new(dataset_id);
    for e in episodes {
        save_episode(root, e)?;
        manifest.episodes.push(EpisodeEntry { id: e.id.clone(), frames: e.frames.len() });
    }
    let chains = root.join("chains");
    std::fs::create_dir_all(&chains).map_err(crate::data::io_err(&chains))?;
    let path = chains.join(format!("{TOY_CHAIN}.json"));
    std::fs::write(&path, toy_chain().to_json()).map_err(crate::data::io_err(&path))?;
    if let Some(c) = catalog {
        save_mesh_catalog(&root.join("meshes"), c)?;
    }
    save_manifest(root, &manifest)?;
    Ok(manifest)
}

/// `episodes` tabletop episodes plus the 40-mesh catalog.
pub fn write_tabletop_dataset(
    root: &Path,
    episodes: usize,
    frames: usize,
    size: u32,
    seed: u64,
) -> Result<DatasetManifest, DataError> {
    let eps: Vec<Episode> = (0..episodes)
        .map(|i| tabletop_episode(&format!("ep{i:03}"), frames, size, size, sub_seed(seed, &format!("episode/{i}"))))
        .collect();
    write_dataset(root, "synthetic-tabletop", &eps, Some(&mesh_catalog(seed)))
}

/// `episodes` pushing trajectories of `frames` frames each.
pub fn write_video_dataset(
    root: &Path,
    episodes: usize,
    frames: usize,
    size: u32,
    seed: u64,
) -> Result<DatasetManifest, DataError> {
    let eps: Vec<Episode> = (0..episodes)
        .map(|i| video_episode(&format!("traj{i:03}"), frames, size, size, sub_seed(seed, &format!("episode/{i}"))).0)
        .collect();
    write_dataset(root, "synthetic-video", &eps, None)
}

/// `count` solid-colored octagon-ish patches as `*.rgb.png` + `*.mask.png` pairs.
pub fn write_patch_library(dir: &Path, count: usize, seed: u64) -> Result<(), DataError> {
    std::fs::create_dir_all(dir).map_err(crate::data::io_err(dir))?;
    for k in 0..count {
        let s = sub_seed(seed, &format!("patch/{k}"));
        let size = 6 + (sub_seed(s, "size") % 8) as u32;
        let color = palette(s, "color");
        let c = (size as f64 - 1.0) / 2.0;
        let mask = Mask::from_fn(size, size, |x, y| (x as f64 - c).abs() + (y as f64 - c).abs() <= 1.5 * c);
        let rgb = Image::from_fn(size, size, |x, y| if mask.get(x, y) { color } else { [0, 0, 0] });
        for (suffix, bytes) in [("rgb", encode_rgb_png(&rgb)), ("mask", encode_mask_png(&mask))] {
            let p = dir.join(format!("patch{k:03}.{suffix}.png"));
            std::fs::write(&p, bytes).map_err(crate::data::io_err(&p))?;
        }
    }
    Ok(())
}
