use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::commands::CliError;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const LEDGER_FILE: &str = "attempts.csv";

/// Describes one `run` output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema_version: u32,
    /// SHA-256 of the raw config file bytes.
    pub config_digest: String,
    pub config_path: String,
    pub calibration_digest: Option<String>,
    pub master_seed: u64,
    pub tool: String,
    pub policies: Vec<String>,
    pub seeds_per_plate: u32,
    pub budget: u32,
    /// Parameter overrides applied on top of the config, by name.
    pub overrides: BTreeMap<String, f64>,
    pub ledger: String,
    pub summaries: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(CliError::usage(format!(
                "{}: schema_version {} is not supported (expected {MANIFEST_SCHEMA_VERSION})",
                path.display(),
                manifest.schema_version
            )));
        }
        Ok(manifest)
    }
}
