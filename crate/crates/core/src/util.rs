use sha2::{Digest, Sha256};

/// Derives a 32-byte RNG seed from a tag, a global seed and arbitrary extra
/// bytes. Stable across platforms and runs, unlike the std hasher.
pub fn stable_seed(tag: &str, seed: u64, extra: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(tag.as_bytes());
    h.update([0u8]);
    h.update(seed.to_le_bytes());
    h.update(extra);
    h.finalize().into()
}

/// SplitMix64 step, used for cheap per-class constants in the renderer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Maps a u64 to [0, 1).
pub fn unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 / (1u64 << 53) as f64
}
