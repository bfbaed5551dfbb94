//! Self-describing model snapshots: weights plus everything needed to feed
//! them (config, normalization stats).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::NormalizationStats;
use crate::error::{Error, Result};
use crate::layers::SequentialModel;
use crate::training::ExperimentConfig;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub stats: NormalizationStats,
    pub model: SequentialModel,
}

impl Checkpoint {
    pub fn new(config: ExperimentConfig, stats: NormalizationStats, model: SequentialModel) -> Result<Self> {
        let ck = Checkpoint {
            version: CHECKPOINT_VERSION,
            config_hash: config.hash(),
            config,
            stats,
            model,
        };
        ck.validate()?;
        Ok(ck)
    }

    fn validate(&self) -> Result<()> {
        let mut p = Vec::new();
        if self.version != CHECKPOINT_VERSION {
            p.push(format!("unsupported checkpoint version {}", self.version));
        }
        if self.config_hash != self.config.hash() {
            p.push("config hash does not match the stored config".into());
        }
        if self.model.input_width() != self.config.features.len() || self.model.output_width() != self.config.horizon {
            p.push(format!(
                "model maps {} inputs to {} outputs but the config has {} features and horizon {}",
                self.model.input_width(),
                self.model.output_width(),
                self.config.features.len(),
                self.config.horizon
            ));
        }
        for f in self.config.features.iter().chain([&crate::data::Feature::Temp]) {
            if !self.stats.features.contains(f) {
                p.push(format!("normalization stats lack feature {f}"));
            }
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Data(format!("invalid checkpoint: {}", p.join("; "))))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        ck.validate()?;
        Ok(ck)
    }

    /// Writes the JSON and returns its SHA-256.
    pub fn save(&self, path: &Path) -> Result<String> {
        let json = self.to_json();
        fs::write(path, &json)?;
        Ok(sha256_hex(json.as_bytes()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Data(format!("cannot read checkpoint {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn hash(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
