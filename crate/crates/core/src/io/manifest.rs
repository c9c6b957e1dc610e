//! Run manifests: enough to reproduce a run byte-for-byte under the oracle
//! backend.

use crate::error::Result;
use crate::symbolic::CostReport;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// FNV-1a 64 over arbitrary bytes; hex-encoded. Used for config hashes.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub backend_mode: String,
    /// Clamp/fallback and other per-run flags.
    pub flags: BTreeMap<String, serde_json::Value>,
    /// Populated only when timing was explicitly requested; omitted by
    /// default so rerunning a seed yields byte-identical artifacts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_secs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost_summary: Option<CostReport>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, backend_mode: &str, config_bytes: &[u8]) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: fnv1a_hex(config_bytes),
            seed,
            backend_mode: backend_mode.to_string(),
            flags: BTreeMap::new(),
            wall_clock_secs: None,
            cost_summary: None,
        }
    }

    pub fn flag(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.flags.insert(key.to_string(), value.into());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        assert_eq!(fnv1a_hex(b"abc"), fnv1a_hex(b"abc"));
        assert_ne!(fnv1a_hex(b"abc"), fnv1a_hex(b"abd"));
    }

    #[test]
    fn manifest_without_timing_serializes_without_wall_clock() {
        let m = RunManifest::new("simulate", 7, "oracle", b"config");
        let json = serde_json::to_string(&m).unwrap();
        assert!(!json.contains("wall_clock"));
        let mut timed = m;
        timed.wall_clock_secs = Some(1.5);
        let json = serde_json::to_string(&timed).unwrap();
        assert!(json.contains("wall_clock_secs"));
    }
}
