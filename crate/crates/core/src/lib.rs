//! Deterministic semantic augmentation for robot demonstration datasets.
//!
//! The crate is organised by stage:
//!
//! - [`data`]: images, depth maps, masks, episodes, mesh catalogs and their on-disk layout.
//! - [`geometry`]: rigid transforms, forward kinematics, camera projections, the depth
//!   rasterizer and top-down heightmaps.
//! - [`backends`]: the inpainting / segmentation / tracking service contract, the procedural
//!   mock, the HTTP client and its wire format.
//! - [`structured`]: RGBD scene editing on annotated observation frames.
//! - [`video`]: automatic frame-by-frame augmentation of whole trajectories.
//! - [`pipeline`]: configuration, seeding, parallel runs, manifests and statistics.
//! - [`policy`]: pick/place label conversion and temporal aggregation of action chunks.

pub mod backends;
pub mod data;
pub mod geometry;
pub mod pipeline;
pub mod policy;
pub mod structured;
pub mod synthetic;
pub mod video;

/// Version string recorded in augmentation provenance.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// 64-bit FNV-1a over `bytes`.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
}

/// SplitMix64 finaliser; spreads the bits of a hash before it is reduced modulo small numbers.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed of `seed` named by `tag`, for splitting one component seed into independent draws.
pub fn sub_seed(seed: u64, tag: &str) -> u64 {
    let mut bytes = Vec::with_capacity(8 + tag.len());
    bytes.extend_from_slice(&seed.to_le_bytes());
    bytes.extend_from_slice(tag.as_bytes());
    mix64(fnv1a64(&bytes))
}

/// Uniform float in `[0, 1)` from the top 53 bits of a seed.
pub fn unit_f64(seed: u64) -> f64 {
    (seed >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
