//! Provenance stamped on every file the pipeline writes.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const CRATE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Module versions recorded in artifacts. Bumped when a module's output
/// changes meaning.
pub const MODULE_VERSIONS: [(&str, u32); 6] = [
    ("market_data", 1),
    ("features", 1),
    ("clustering", 1),
    ("flow", 1),
    ("strategy", 1),
    ("synth", 1),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub config_hash: String,
    pub crate_version: String,
    pub modules: String,
}

impl ArtifactMeta {
    pub fn new(config_hash: impl Into<String>) -> Self {
        ArtifactMeta {
            config_hash: config_hash.into(),
            crate_version: CRATE_VERSION.to_string(),
            modules: module_versions(),
        }
    }

    /// `# key=value ...` line for the top of CSV outputs.
    pub fn csv_comment(&self) -> String {
        format!(
            "# config_hash={} lobflow={} modules={}\n",
            self.config_hash, self.crate_version, self.modules
        )
    }
}

pub fn module_versions() -> String {
    MODULE_VERSIONS
        .iter()
        .map(|(m, v)| format!("{m}:{v}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// Hex SHA-256 of `bytes`, truncated to 16 characters.
pub fn short_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}
