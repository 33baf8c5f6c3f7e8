use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::codecs::png::PngEncoder;
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};
use serde::{Deserialize, Serialize};

use super::{io_err, DataError, DepthMap, Episode, Frame, Image, Mask, NamedCamera, View};
use crate::geometry::{CameraModel, RigidTransform};

pub const SCHEMA_VERSION: u32 = 1;

pub fn encode_rgb_png(img: &Image) -> Vec<u8> {
    let mut out = Vec::new();
    PngEncoder::new(&mut out)
        .write_image(img.as_bytes(), img.width(), img.height(), ExtendedColorType::Rgb8)
        .expect("in-memory PNG encoding cannot fail for a valid image");
    out
}

/// 8-bit grayscale, 255 for members.
pub fn encode_mask_png(mask: &Mask) -> Vec<u8> {
    let bytes: Vec<u8> = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    let mut out = Vec::new();
    PngEncoder::new(&mut out)
        .write_image(&bytes, mask.width(), mask.height(), ExtendedColorType::L8)
        .expect("in-memory PNG encoding cannot fail for a valid mask");
    out
}

/// 16-bit grayscale millimeters, round half up, 0 for invalid pixels.
pub fn encode_depth_png(depth: &DepthMap) -> Result<Vec<u8>, DataError> {
    let mut bytes = Vec::with_capacity(depth.values().len() * 2);
    for &d in depth.values() {
        // The PNG encoder takes native-endian u16 samples.
        bytes.extend_from_slice(&DepthMap::quantize_mm(d)?.to_ne_bytes());
    }
    let mut out = Vec::new();
    PngEncoder::new(&mut out)
        .write_image(&bytes, depth.width(), depth.height(), ExtendedColorType::L16)
        .map_err(|e| DataError::Invariant(format!("depth PNG encoding failed: {e}")))?;
    Ok(out)
}

fn decode(bytes: &[u8]) -> Result<DynamicImage, String> {
    image::load(Cursor::new(bytes), ImageFormat::Png).map_err(|e| e.to_string())
}

pub fn decode_rgb_png(bytes: &[u8]) -> Result<Image, String> {
    let img = match decode(bytes)? {
        DynamicImage::ImageRgb8(b) => b,
        DynamicImage::ImageRgba8(b) => DynamicImage::ImageRgba8(b).to_rgb8(),
        DynamicImage::ImageLuma8(b) => DynamicImage::ImageLuma8(b).to_rgb8(),
        other => return Err(format!("expected 8-bit RGB, found {:?}", other.color())),
    };
    let (w, h) = img.dimensions();
    Image::new(w, h, img.into_raw()).map_err(|e| e.to_string())
}

pub fn decode_mask_png(bytes: &[u8]) -> Result<Mask, String> {
    let img = match decode(bytes)? {
        DynamicImage::ImageLuma8(b) => b,
        other => return Err(format!("expected 8-bit grayscale mask, found {:?}", other.color())),
    };
    let (w, h) = img.dimensions();
    Mask::from_bits(w, h, img.into_raw().into_iter().map(|v| v >= 128).collect()).map_err(|e| e.to_string())
}

pub fn decode_depth_png(bytes: &[u8]) -> Result<DepthMap, String> {
    let img = match decode(bytes)? {
        DynamicImage::ImageLuma16(b) => b,
        other => return Err(format!("expected 16-bit grayscale depth, found {:?}", other.color())),
    };
    let (w, h) = img.dimensions();
    DepthMap::new(w, h, img.into_raw().into_iter().map(DepthMap::dequantize_mm).collect())
        .map_err(|e| e.to_string())
}

#[derive(Serialize, Deserialize)]
struct CameraRecord {
    name: String,
    width: u32,
    height: u32,
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    /// Camera-to-world, row-major 4×4.
    pose: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FrameRecord {
    joints: Vec<f64>,
    gripper: f64,
    action: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MetaFile {
    schema_version: u32,
    id: String,
    task_text: String,
    object_label: String,
    receptacle_label: String,
    chain_ref: String,
    cameras: Vec<CameraRecord>,
    frames: Vec<FrameRecord>,
}

pub(crate) fn episode_dir(root: &Path, id: &str) -> PathBuf {
    root.join("episodes").join(id)
}

fn frame_file(dir: &Path, index: usize, camera: &str, kind: &str) -> PathBuf {
    dir.join("frames").join(format!("{index:06}.{camera}.{kind}.png"))
}

fn mask_file(dir: &Path, which: &str) -> PathBuf {
    dir.join("masks").join(format!("000000.{which}.png"))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, DataError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| DataError::Json { path: path.to_path_buf(), message: e.to_string() })
}

fn read_optional(path: &Path) -> Result<Option<Vec<u8>>, DataError> {
    match std::fs::read(path) {
        Ok(b) => Ok(Some(b)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(DataError::Io { path: path.to_path_buf(), source: e }),
    }
}

fn corrupt(path: &Path) -> impl FnOnce(String) -> DataError + '_ {
    move |message| DataError::CorruptImage { path: path.to_path_buf(), message }
}

fn expect_dims(what: String, expected: (u32, u32), found: (u32, u32)) -> Result<(), DataError> {
    if expected != found {
        return Err(DataError::DimensionMismatch { what, expected, found });
    }
    Ok(())
}

/// Reads `episodes/<id>` under the dataset `root`.
pub fn load_episode(root: &Path, id: &str) -> Result<Episode, DataError> {
    let dir = episode_dir(root, id);
    let meta: MetaFile = read_json(&dir.join("meta.json"))?;
    if meta.schema_version != SCHEMA_VERSION {
        return Err(DataError::UnsupportedSchema(meta.schema_version));
    }
    let cameras = meta
        .cameras
        .into_iter()
        .map(|c| {
            let pose = RigidTransform::from_row_major(&c.pose)
                .map_err(|e| DataError::Invariant(format!("camera {:?} pose: {e}", c.name)))?;
            Ok(NamedCamera {
                name: c.name,
                width: c.width,
                height: c.height,
                model: CameraModel { fx: c.fx, fy: c.fy, cx: c.cx, cy: c.cy, pose },
            })
        })
        .collect::<Result<Vec<_>, DataError>>()?;
    if cameras.is_empty() {
        return Err(DataError::Invariant(format!("episode {id} declares no cameras")));
    }

    let mut frames = Vec::with_capacity(meta.frames.len());
    for (i, rec) in meta.frames.into_iter().enumerate() {
        let mut views = Vec::with_capacity(cameras.len());
        for cam in &cameras {
            let rgb_path = frame_file(&dir, i, &cam.name, "rgb");
            let bytes = std::fs::read(&rgb_path).map_err(io_err(&rgb_path))?;
            let rgb = decode_rgb_png(&bytes).map_err(corrupt(&rgb_path))?;
            expect_dims(format!("{}", rgb_path.display()), (cam.width, cam.height), rgb.dims())?;
            let depth_path = frame_file(&dir, i, &cam.name, "depth");
            let depth = match read_optional(&depth_path)? {
                Some(bytes) => {
                    let d = decode_depth_png(&bytes).map_err(corrupt(&depth_path))?;
                    expect_dims(format!("{}", depth_path.display()), rgb.dims(), d.dims())?;
                    Some(d)
                }
                None => None,
            };
            views.push(View { rgb, depth });
        }
        frames.push(Frame { views, joints: rec.joints, gripper: rec.gripper, action: rec.action });
    }

    let primary = (cameras[0].width, cameras[0].height);
    let load_mask = |which: &str| -> Result<Option<Mask>, DataError> {
        let path = mask_file(&dir, which);
        match read_optional(&path)? {
            Some(bytes) => {
                let m = decode_mask_png(&bytes).map_err(corrupt(&path))?;
                expect_dims(format!("{}", path.display()), primary, m.dims())?;
                Ok(Some(m))
            }
            None => Ok(None),
        }
    };
    let object_mask = load_mask("object")?;
    let receptacle_mask = load_mask("receptacle")?;

    Ok(Episode {
        id: meta.id,
        frames,
        task_text: meta.task_text,
        object_label: meta.object_label,
        receptacle_label: meta.receptacle_label,
        object_mask,
        receptacle_mask,
        chain_ref: meta.chain_ref,
        cameras,
    })
}

/// Writes `episodes/<episode.id>` under `root`, replacing any previous contents of that directory.
/// Nothing is written if the episode breaks an invariant or holds unrepresentable depth.
pub fn save_episode(root: &Path, episode: &Episode) -> Result<(), DataError> {
    let violations = episode.check_invariants();
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().take(5).map(|v| v.to_string()).collect();
        return Err(DataError::Invariant(format!(
            "episode {:?} is invalid ({} violations): {}",
            episode.id,
            violations.len(),
            list.join("; ")
        )));
    }

    // Encode everything first so a failure leaves the disk untouched.
    let mut files: Vec<(PathBuf, Vec<u8>)> = Vec::new();
    let dir = episode_dir(root, &episode.id);
    for (i, frame) in episode.frames.iter().enumerate() {
        for (view, cam) in frame.views.iter().zip(&episode.cameras) {
            files.push((frame_file(&dir, i, &cam.name, "rgb"), encode_rgb_png(&view.rgb)));
            if let Some(d) = &view.depth {
                files.push((frame_file(&dir, i, &cam.name, "depth"), encode_depth_png(d)?));
            }
        }
    }
    if let Some(m) = &episode.object_mask {
        files.push((mask_file(&dir, "object"), encode_mask_png(m)));
    }
    if let Some(m) = &episode.receptacle_mask {
        files.push((mask_file(&dir, "receptacle"), encode_mask_png(m)));
    }
    let meta = MetaFile {
        schema_version: SCHEMA_VERSION,
        id: episode.id.clone(),
        task_text: episode.task_text.clone(),
        object_label: episode.object_label.clone(),
        receptacle_label: episode.receptacle_label.clone(),
        chain_ref: episode.chain_ref.clone(),
        cameras: episode
            .cameras
            .iter()
            .map(|c| CameraRecord {
                name: c.name.clone(),
                width: c.width,
                height: c.height,
                fx: c.model.fx,
                fy: c.model.fy,
                cx: c.model.cx,
                cy: c.model.cy,
                pose: c.model.pose.to_row_major().to_vec(),
            })
            .collect(),
        frames: episode
            .frames
            .iter()
            .map(|f| FrameRecord { joints: f.joints.clone(), gripper: f.gripper, action: f.action.clone() })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&meta).expect("meta serialises");
    files.push((dir.join("meta.json"), json.into_bytes()));

    if dir.exists() {
        std::fs::remove_dir_all(&dir).map_err(io_err(&dir))?;
    }
    for sub in ["frames", "masks"] {
        let p = dir.join(sub);
        std::fs::create_dir_all(&p).map_err(io_err(&p))?;
    }
    for (path, bytes) in files {
        std::fs::write(&path, bytes).map_err(io_err(&path))?;
    }
    Ok(())
}
