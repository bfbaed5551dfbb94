use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-epoch full-pass losses.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossHistory {
    pub train_mse: Vec<f64>,
    pub val_mse: Vec<f64>,
}

impl LossHistory {
    pub fn from_pairs(train: &[f64], val: &[f64]) -> Result<Self> {
        if train.len() != val.len() {
            return Err(Error::Data(format!("{} training losses but {} validation losses", train.len(), val.len())));
        }
        if train.iter().chain(val).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("loss history".into()));
        }
        Ok(LossHistory {
            train_mse: train.to_vec(),
            val_mse: val.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.train_mse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_mse.is_empty()
    }

    pub fn push(&mut self, train: f64, val: f64) {
        self.train_mse.push(train);
        self.val_mse.push(val);
    }

    /// `val − train` at the last epoch.
    pub fn final_gap(&self) -> Option<f64> {
        Some(self.val_mse.last()? - self.train_mse.last()?)
    }

    /// `epoch,train_mse,val_mse` with 1-based epochs.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "epoch,train_mse,val_mse")?;
        for (i, (t, v)) in self.train_mse.iter().zip(&self.val_mse).enumerate() {
            writeln!(out, "{},{t},{v}", i + 1)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }
}

/// Thresholds for [`detect_overfitting`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverfitRule {
    /// Flag when `val > ratio × train` on every epoch of the final half.
    pub ratio: f64,
    /// Length of the trailing run checked for rising val / falling train.
    pub trend_epochs: usize,
}

impl Default for OverfitRule {
    fn default() -> Self {
        OverfitRule {
            ratio: 1.15,
            trend_epochs: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnosis {
    pub overfitting: bool,
    pub persistent_gap: bool,
    pub diverging_trend: bool,
    pub final_ratio: f64,
}

pub fn detect_overfitting(history: &LossHistory, rule: OverfitRule) -> Result<Diagnosis> {
    let n = history.len();
    if n < 2 {
        return Err(Error::Data(format!("overfitting diagnosis needs at least 2 epochs, got {n}")));
    }
    let (train, val) = (&history.train_mse, &history.val_mse);
    let persistent_gap = (n / 2..n).all(|e| val[e] > rule.ratio * train[e]);
    let k = rule.trend_epochs;
    let diverging_trend = k >= 2
        && n >= k
        && (n - k + 1..n).all(|e| val[e] > val[e - 1] && train[e] < train[e - 1]);
    Ok(Diagnosis {
        overfitting: persistent_gap || diverging_trend,
        persistent_gap,
        diverging_trend,
        final_ratio: val[n - 1] / train[n - 1],
    })
}
