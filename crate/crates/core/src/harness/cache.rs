//! Disk cache for pool-level GED matrices, the dominant pipeline cost. Keys
//! cover everything the matrix depends on (seed, class ids, generation
//! parameters, edit costs); files are raw little-endian f64 blocks behind a
//! short header. The cache directory comes from `CCM_CACHE_DIR` or falls
//! back to the system temp directory.

use std::path::{Path, PathBuf};

use crate::graphs::EditCostParams;

const MAGIC: u64 = 0x4343_4d47_4544_3031; // "CCMGED01"

/// Environment variable overriding the cache directory.
pub const CACHE_DIR_ENV: &str = "CCM_CACHE_DIR";

pub fn cache_dir() -> PathBuf {
    match std::env::var_os(CACHE_DIR_ENV) {
        Some(dir) => PathBuf::from(dir),
        None => std::env::temp_dir().join("ccm-cache"),
    }
}

/// Cache key for one GED block.
#[derive(Debug, Clone, Copy)]
pub struct GedKey {
    pub seed: u64,
    pub class_a: u32,
    pub class_b: u32,
    pub pool_size: usize,
    pub n_points: usize,
    pub support_box: f64,
    pub node_noise_radius: f64,
    pub costs: EditCostParams,
}

impl GedKey {
    fn digest(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64; // FNV-1a over the key fields
        let mut mix = |v: u64| {
            h ^= v;
            h = h.wrapping_mul(0x1000_0000_01b3);
        };
        mix(self.seed);
        mix(self.class_a as u64);
        mix(self.class_b as u64);
        mix(self.pool_size as u64);
        mix(self.n_points as u64);
        mix(self.support_box.to_bits());
        mix(self.node_noise_radius.to_bits());
        mix(self.costs.node_insert_delete.to_bits());
        mix(self.costs.edge_insert_delete.to_bits());
        mix(self.costs.substitution_cap.to_bits());
        h
    }

    fn path(&self, dir: &Path) -> PathBuf {
        dir.join(format!(
            "ged-{:016x}-{}-{}.bin",
            self.digest(),
            self.class_a,
            self.class_b
        ))
    }
}

/// Load a cached block of `len` values, or `None` on any mismatch.
pub fn load(key: &GedKey, len: usize) -> Option<Vec<f64>> {
    let path = key.path(&cache_dir());
    let bytes = std::fs::read(path).ok()?;
    if bytes.len() != 16 + len * 8 {
        return None;
    }
    let magic = u64::from_le_bytes(bytes[0..8].try_into().ok()?);
    let digest = u64::from_le_bytes(bytes[8..16].try_into().ok()?);
    if magic != MAGIC || digest != key.digest() {
        return None;
    }
    let mut values = Vec::with_capacity(len);
    for chunk in bytes[16..].chunks_exact(8) {
        values.push(f64::from_le_bytes(chunk.try_into().ok()?));
    }
    Some(values)
}

/// Store a block; failures are ignored (the cache is an optimisation only).
pub fn store(key: &GedKey, values: &[f64]) {
    let dir = cache_dir();
    if std::fs::create_dir_all(&dir).is_err() {
        return;
    }
    let path = key.path(&dir);
    let mut bytes = Vec::with_capacity(16 + values.len() * 8);
    bytes.extend_from_slice(&MAGIC.to_le_bytes());
    bytes.extend_from_slice(&key.digest().to_le_bytes());
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    // write-then-rename so concurrent runs never observe a partial file
    let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
    if std::fs::write(&tmp, &bytes).is_ok() {
        let _ = std::fs::rename(&tmp, &path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_disk() {
        let dir = std::env::temp_dir().join(format!("ccm-cache-test-{}", std::process::id()));
        std::env::set_var(CACHE_DIR_ENV, &dir);
        let key = GedKey {
            seed: 5,
            class_a: 0,
            class_b: 2,
            pool_size: 3,
            n_points: 10,
            support_box: 10.0,
            node_noise_radius: 0.5,
            costs: EditCostParams::default(),
        };
        let values = vec![0.0, 1.5, 2.25, 1.5, 0.0, 3.0, 2.25, 3.0, 0.0];
        assert!(load(&key, values.len()).is_none());
        store(&key, &values);
        assert_eq!(load(&key, values.len()).unwrap(), values);
        // wrong length misses
        assert!(load(&key, 4).is_none());
        std::env::remove_var(CACHE_DIR_ENV);
        std::fs::remove_dir_all(&dir).ok();
    }
}
