use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tempora::data::SyntheticWeatherSpec;
use tempora::training::{ExperimentConfig, Override, Scale};

use crate::CliError;

/// Where the series came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    Csv { path: PathBuf, sha256: String },
    Synthetic { spec: SyntheticWeatherSpec, calendar: String },
}

/// Everything needed to re-run a training run bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub preset: Option<String>,
    pub scale: Scale,
    /// Config-file and command-line overrides, in application order.
    pub overrides: Vec<Override>,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub data: DataSource,
    pub out_dir: PathBuf,
    /// SHA-256 per artifact, keyed by path relative to `out_dir`.
    pub artifacts: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, serde_json::to_string_pretty(self).map_err(tempora::Error::from)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text).map_err(tempora::Error::from)?)
    }
}
