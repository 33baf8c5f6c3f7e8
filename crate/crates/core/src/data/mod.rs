//! Domain values and the on-disk dataset layout.

mod episode;
mod image;
mod io;
pub(crate) use io::episode_dir;
mod manifest;
mod mask;
mod mesh;

pub use self::image::{DepthMap, Image, MAX_DEPTH_M};
pub use episode::{validate_episode, Episode, Frame, NamedCamera, View, Violation};
pub use io::{
    decode_depth_png, decode_mask_png, decode_rgb_png, encode_depth_png, encode_mask_png,
    encode_rgb_png, load_episode, save_episode, SCHEMA_VERSION,
};
pub use manifest::{load_manifest, save_manifest, DatasetManifest, EpisodeEntry};
pub use mask::Mask;
pub use mesh::{load_mesh_catalog, parse_obj, save_mesh_catalog, CatalogCounts, MeshAsset, MeshCatalog, Role};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("dimension mismatch for {what}: expected {expected:?}, found {found:?}")]
    DimensionMismatch { what: String, expected: (u32, u32), found: (u32, u32) },
    #[error("corrupt image {path}: {message}")]
    CorruptImage { path: PathBuf, message: String },
    #[error("unsupported schema version {0}")]
    UnsupportedSchema(u32),
    #[error("invalid JSON in {path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    Mesh { path: PathBuf, line: usize, message: String },
    #[error("mesh catalog {0} lists no meshes")]
    EmptyCatalog(PathBuf),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> DataError {
    let path = path.into();
    move |source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            DataError::MissingFile(path)
        } else {
            DataError::Io { path, source }
        }
    }
}
