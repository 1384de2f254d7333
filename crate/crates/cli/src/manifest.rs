use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

/// Everything needed to re-run a command, written next to its first output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub outputs: Vec<String>,
    pub threads: usize,
    pub version: String,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new<T: Serialize>(
        command: &str,
        params: &T,
        seed: Option<u64>,
        outputs: &[&Path],
        threads: usize,
        notes: Vec<String>,
    ) -> Self {
        RunManifest {
            command: command.to_string(),
            params: serde_json::to_value(params).expect("parameters serialize"),
            seed,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            threads,
            version: env!("CARGO_PKG_VERSION").to_string(),
            notes,
        }
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(path, text + "\n")
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// `<output>.manifest.json`.
pub fn path_for(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
