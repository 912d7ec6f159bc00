//! Run manifests and canonical config digests.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use robustssl::Result;

/// Hash of a config after canonicalization (parse to a JSON value, which
/// sorts object keys, then re-serialize). Stable under key reordering and
/// whitespace changes.
pub fn config_digest(config_json: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(config_json).expect("value reserializes");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_of<T: Serialize>(value: &T) -> Result<String> {
    let as_value = serde_json::to_value(value)?;
    Ok(config_digest(&as_value))
}

/// Metadata written once per command invocation. The timestamp and timing
/// fields are the only non-reproducible outputs of a run; every data file
/// is byte-stable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_digest: String,
    pub master_seed: u64,
    pub created_unix_ms: u128,
    pub elapsed_ms: u128,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(config_digest: String, master_seed: u64) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_digest,
            master_seed,
            created_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
            elapsed_ms: 0,
            outputs: Vec::new(),
        }
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
