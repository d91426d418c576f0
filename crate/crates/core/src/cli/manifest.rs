use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::scenario::json::to_canonical_json;

/// Record of one invocation, written when `--manifest` is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub seed: Option<u64>,
    pub versions: BTreeMap<String, String>,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    /// SHA-256 per input path.
    pub input_digests: BTreeMap<String, String>,
    pub output_paths: Vec<String>,
}

impl RunManifest {
    pub fn now_ms() -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64)
    }

    pub fn new<'a>(
        argv: &[OsString],
        seed: Option<u64>,
        started_unix_ms: u64,
        input_digests: BTreeMap<String, String>,
        outputs: impl Iterator<Item = &'a PathBuf>,
    ) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("asymbell".into(), env!("CARGO_PKG_VERSION").into());
        Self {
            command_line: argv
                .iter()
                .map(|a| a.to_string_lossy().into_owned())
                .collect(),
            seed,
            versions,
            started_unix_ms,
            finished_unix_ms: Self::now_ms(),
            input_digests,
            output_paths: outputs.map(|p| p.display().to_string()).collect(),
        }
    }
}

/// SHA-256 of the canonical JSON form when `text` is JSON, of the raw bytes
/// otherwise, so reformatting a JSON input does not change its digest.
pub fn digest_text(text: &str) -> String {
    let canonical = serde_json::from_str::<serde_json::Value>(text)
        .ok()
        .and_then(|v| to_canonical_json(&v, false).ok());
    let bytes = canonical.as_deref().unwrap_or(text).as_bytes();
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_ignores_json_layout() {
        assert_eq!(
            digest_text("{\"b\": 1, \"a\": [1, 2]}"),
            digest_text("{\"a\":[1,2],\"b\":1}")
        );
        assert_ne!(digest_text("{\"a\":1}"), digest_text("{\"a\":2}"));
        assert_eq!(digest_text("l,n\n").len(), 64);
        // Empty input, standard test vector.
        assert_eq!(
            digest_text(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
