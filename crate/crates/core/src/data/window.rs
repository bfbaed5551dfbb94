use chrono::NaiveDateTime;

use super::frame::{Feature, SeriesFrame};
use crate::error::{Error, Result};
use crate::layers::SequenceBatch;
use crate::numerics::Matrix;

/// Stride-1 supervised windows over a frame: sample `i` pairs rows
/// `i..i+H` (the chosen features) with the next `K` temperatures.
///
/// Windows are views into one copy of the series; batches are assembled on
/// demand.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowedDataset {
    features: Vec<Feature>,
    history: usize,
    horizon: usize,
    /// Row-major `L × F`.
    x: Vec<f64>,
    temp: Vec<f64>,
    timestamps: Vec<NaiveDateTime>,
}

pub fn make_windows(frame: &SeriesFrame, features: &[Feature], history: usize, horizon: usize) -> Result<WindowedDataset> {
    if history == 0 || horizon == 0 {
        return Err(Error::config(format!("history ({history}) and horizon ({horizon}) must be positive")));
    }
    if features.is_empty() {
        return Err(Error::config("at least one input feature is required"));
    }
    let temp = frame.column(Feature::Temp)?.to_vec();
    let cols = features.iter().map(|&f| frame.column(f)).collect::<Result<Vec<_>>>()?;
    if frame.len() < history + horizon {
        return Err(Error::Data(format!(
            "series of {} hours is shorter than history {history} + horizon {horizon}",
            frame.len()
        )));
    }
    let mut x = Vec::with_capacity(frame.len() * features.len());
    for r in 0..frame.len() {
        x.extend(cols.iter().map(|c| c[r]));
    }
    Ok(WindowedDataset {
        features: features.to_vec(),
        history,
        horizon,
        x,
        temp,
        timestamps: frame.timestamps().to_vec(),
    })
}

impl WindowedDataset {
    /// `L − H − K + 1`.
    pub fn len(&self) -> usize {
        self.temp.len() + 1 - self.history - self.horizon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn history(&self) -> usize {
        self.history
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn series_len(&self) -> usize {
        self.temp.len()
    }

    /// Input window `i`, row-major `H × F`.
    pub fn x(&self, i: usize) -> &[f64] {
        let f = self.features.len();
        &self.x[i * f..(i + self.history) * f]
    }

    /// Target vector `i`: temperatures at rows `i+H .. i+H+K`.
    pub fn y(&self, i: usize) -> &[f64] {
        &self.temp[i + self.history..i + self.history + self.horizon]
    }

    /// Temperatures inside input window `i`.
    pub fn history_temp(&self, i: usize) -> &[f64] {
        &self.temp[i..i + self.history]
    }

    /// Timestamp of the first forecast hour of window `i`.
    pub fn origin(&self, i: usize) -> NaiveDateTime {
        self.timestamps[i + self.history]
    }

    /// Window whose first forecast hour is `at`.
    pub fn index_of_origin(&self, at: NaiveDateTime) -> Option<usize> {
        (0..self.len()).find(|&i| self.origin(i) == at)
    }

    /// Stacks the given windows into model input and targets.
    pub fn batch(&self, indices: &[usize]) -> (SequenceBatch, Matrix) {
        let f = self.features.len();
        let mut xs = Vec::with_capacity(indices.len() * self.history * f);
        let mut ys = Vec::with_capacity(indices.len() * self.horizon);
        for &i in indices {
            xs.extend_from_slice(self.x(i));
            ys.extend_from_slice(self.y(i));
        }
        (
            SequenceBatch::from_raw(indices.len(), self.history, f, xs),
            Matrix::from_raw(indices.len(), self.horizon, ys),
        )
    }
}

/// Splits at row `floor(L × train_fraction)` without shuffling.
pub fn chronological_split(frame: &SeriesFrame, train_fraction: f64) -> Result<(SeriesFrame, SeriesFrame)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::config(format!("train fraction must lie strictly between 0 and 1, got {train_fraction}")));
    }
    let boundary = (frame.len() as f64 * train_fraction).floor() as usize;
    if boundary == 0 || boundary == frame.len() {
        return Err(Error::Data(format!(
            "splitting {} rows at {train_fraction} leaves one side empty",
            frame.len()
        )));
    }
    Ok((frame.slice(0, boundary), frame.slice(boundary, frame.len())))
}
