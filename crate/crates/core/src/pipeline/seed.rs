use crate::fnv1a64;

/// Seed for one random decision of one work item.
///
/// FNV-1a-64 over `global_seed (u64 LE) ‖ episode_id ‖ 0x00 ‖ aug_index (u64 LE) ‖
/// frame_index (u64 LE) ‖ component_tag`. Every random choice in the engine flows through here,
/// so results depend only on the item, never on scheduling.
pub fn derive_seed(global_seed: u64, episode_id: &str, aug_index: u64, frame_index: u64, component_tag: &str) -> u64 {
    let mut bytes = Vec::with_capacity(25 + episode_id.len() + component_tag.len());
    bytes.extend_from_slice(&global_seed.to_le_bytes());
    bytes.extend_from_slice(episode_id.as_bytes());
    bytes.push(0);
    bytes.extend_from_slice(&aug_index.to_le_bytes());
    bytes.extend_from_slice(&frame_index.to_le_bytes());
    bytes.extend_from_slice(component_tag.as_bytes());
    fnv1a64(&bytes)
}
