use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::frame::{Feature, SeriesFrame};
use crate::error::{Error, Result};

/// Per-feature z-score parameters, fitted on the training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub features: Vec<Feature>,
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
}

impl NormalizationStats {
    pub fn fit(frame: &SeriesFrame) -> Result<Self> {
        if frame.is_empty() {
            return Err(Error::Data("cannot fit normalization on an empty frame".into()));
        }
        let n = frame.len() as f64;
        let mut stats = NormalizationStats {
            features: Vec::new(),
            mean: Vec::new(),
            std: Vec::new(),
        };
        for (f, values) in frame.columns() {
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            if std <= 1e-12 * mean.abs().max(1.0) {
                return Err(Error::ZeroStd(f.name().into()));
            }
            stats.features.push(f);
            stats.mean.push(mean);
            stats.std.push(std);
        }
        Ok(stats)
    }

    fn index(&self, feature: Feature) -> Result<usize> {
        self.features
            .iter()
            .position(|&f| f == feature)
            .ok_or_else(|| Error::Data(format!("normalization stats do not cover feature {feature}")))
    }

    pub fn mean_of(&self, feature: Feature) -> Result<f64> {
        Ok(self.mean[self.index(feature)?])
    }

    pub fn std_of(&self, feature: Feature) -> Result<f64> {
        Ok(self.std[self.index(feature)?])
    }

    pub fn normalize_value(&self, feature: Feature, v: f64) -> Result<f64> {
        let i = self.index(feature)?;
        Ok((v - self.mean[i]) / self.std[i])
    }

    pub fn denormalize_value(&self, feature: Feature, z: f64) -> Result<f64> {
        let i = self.index(feature)?;
        Ok(z * self.std[i] + self.mean[i])
    }

    pub fn normalize(&self, frame: &SeriesFrame) -> Result<SeriesFrame> {
        frame.map_columns(|f, v| {
            let i = self.index(f)?;
            if self.std[i] <= 0.0 {
                return Err(Error::ZeroStd(f.name().into()));
            }
            Ok(v.iter().map(|x| (x - self.mean[i]) / self.std[i]).collect())
        })
    }

    pub fn denormalize(&self, frame: &SeriesFrame) -> Result<SeriesFrame> {
        frame.map_columns(|f, v| {
            let i = self.index(f)?;
            Ok(v.iter().map(|z| z * self.std[i] + self.mean[i]).collect())
        })
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("stats serialize");
        hex::encode(Sha256::digest(json))
    }
}
