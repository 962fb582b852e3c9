use std::fmt::Write as _;
use std::path::Path;

use super::{Config, ConfigError};

/// Reproducibility record written next to every output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentManifest {
    pub config_hash: String,
    pub seed: u64,
    /// Hash of the model file used, or empty.
    pub model_hash: String,
    pub software_version: String,
    /// Seconds since the Unix epoch, supplied by the caller.
    pub timestamp: u64,
}

impl ExperimentManifest {
    pub fn new(config: &Config, seed: u64, model_hash: impl Into<String>, timestamp: u64) -> Self {
        Self {
            config_hash: config.hash(),
            seed,
            model_hash: model_hash.into(),
            software_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "config_hash = {}", self.config_hash);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "model_hash = {}", self.model_hash);
        let _ = writeln!(out, "software_version = {}", self.software_version);
        let _ = writeln!(out, "timestamp = {}", self.timestamp);
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut m = ExperimentManifest {
            config_hash: String::new(),
            seed: 0,
            model_hash: String::new(),
            software_version: String::new(),
            timestamp: 0,
        };
        let mut seen = 0;
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Manifest(format!("malformed line `{line}`")))?;
            let v = v.trim();
            let num = |v: &str| v.parse::<u64>().map_err(|e| ConfigError::Manifest(format!("{k}: {e}")));
            match k.trim() {
                "config_hash" => m.config_hash = v.to_string(),
                "seed" => m.seed = num(v)?,
                "model_hash" => m.model_hash = v.to_string(),
                "software_version" => m.software_version = v.to_string(),
                "timestamp" => m.timestamp = num(v)?,
                other => return Err(ConfigError::Manifest(format!("unknown key `{other}`"))),
            }
            seen += 1;
        }
        if seen != 5 {
            return Err(ConfigError::Manifest(format!("expected 5 keys, found {seen}")));
        }
        Ok(m)
    }
}

pub const MANIFEST_FILE: &str = "manifest.txt";

pub fn write_manifest(run_dir: &Path, manifest: &ExperimentManifest) -> Result<(), ConfigError> {
    let path = run_dir.join(MANIFEST_FILE);
    std::fs::write(&path, manifest.to_text()).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_manifest(run_dir: &Path) -> Result<ExperimentManifest, ConfigError> {
    let path = run_dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ExperimentManifest::from_text(&text)
}

/// Check that a set of manifests may be aggregated into one table: all must
/// share a configuration hash. Returns that hash.
pub fn aggregate_manifests(manifests: &[ExperimentManifest]) -> Result<String, ConfigError> {
    let first = manifests
        .first()
        .ok_or_else(|| ConfigError::Manifest("nothing to aggregate".into()))?;
    if let Some(other) = manifests.iter().find(|m| m.config_hash != first.config_hash) {
        return Err(ConfigError::Manifest(format!(
            "refusing to aggregate runs with different config hashes ({} vs {})",
            first.config_hash, other.config_hash
        )));
    }
    Ok(first.config_hash.clone())
}
