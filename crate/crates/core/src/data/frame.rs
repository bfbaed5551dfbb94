use std::fmt;
use std::str::FromStr;

use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six hourly measurements of the weather station.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feature {
    Temp,
    Hum,
    Airpr,
    Solrad,
    Windvel,
    Winddir,
}

impl Feature {
    pub const ALL: [Feature; 6] = [
        Feature::Temp,
        Feature::Hum,
        Feature::Airpr,
        Feature::Solrad,
        Feature::Windvel,
        Feature::Winddir,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Temp => "temp",
            Feature::Hum => "hum",
            Feature::Airpr => "airpr",
            Feature::Solrad => "solrad",
            Feature::Windvel => "windvel",
            Feature::Winddir => "winddir",
        }
    }

    /// Physically meaningful range, for features that have one.
    pub fn natural_range(self) -> Option<(f64, f64)> {
        match self {
            Feature::Hum => Some((0.0, 100.0)),
            Feature::Winddir => Some((0.0, 360.0)),
            _ => None,
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Feature::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownFeature(s.to_string()))
    }
}

/// Hourly multivariate observations. Timestamps are strictly increasing at
/// one-hour spacing and every column has one value per timestamp.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesFrame {
    timestamps: Vec<NaiveDateTime>,
    columns: Vec<(Feature, Vec<f64>)>,
}

impl SeriesFrame {
    pub fn new(timestamps: Vec<NaiveDateTime>, columns: Vec<(Feature, Vec<f64>)>) -> Result<Self> {
        let mut problems = Vec::new();
        for w in timestamps.windows(2) {
            if w[1] - w[0] != Duration::hours(1) {
                problems.push(format!("timestamps {} and {} are not one hour apart", w[0], w[1]));
                break;
            }
        }
        for (i, (f, values)) in columns.iter().enumerate() {
            if values.len() != timestamps.len() {
                problems.push(format!("column {f} has {} values for {} timestamps", values.len(), timestamps.len()));
            }
            if columns[..i].iter().any(|(g, _)| g == f) {
                problems.push(format!("column {f} appears twice"));
            }
            if let Some(k) = values.iter().position(|v| !v.is_finite()) {
                problems.push(format!("column {f} has a non-finite value at row {k}"));
            }
        }
        if problems.is_empty() {
            Ok(SeriesFrame { timestamps, columns })
        } else {
            Err(Error::Data(problems.join("; ")))
        }
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn features(&self) -> Vec<Feature> {
        self.columns.iter().map(|(f, _)| *f).collect()
    }

    pub fn has(&self, feature: Feature) -> bool {
        self.columns.iter().any(|(f, _)| *f == feature)
    }

    pub fn column(&self, feature: Feature) -> Result<&[f64]> {
        self.columns
            .iter()
            .find(|(f, _)| *f == feature)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::UnknownFeature(feature.name().into()))
    }

    pub fn columns(&self) -> impl Iterator<Item = (Feature, &[f64])> {
        self.columns.iter().map(|(f, v)| (*f, v.as_slice()))
    }

    /// Index of the row stamped `at`, if present.
    pub fn position(&self, at: NaiveDateTime) -> Option<usize> {
        let first = *self.timestamps.first()?;
        let offset = (at - first).num_hours();
        (offset >= 0 && (offset as usize) < self.len() && self.timestamps[offset as usize] == at).then_some(offset as usize)
    }

    /// Rows `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> SeriesFrame {
        SeriesFrame {
            timestamps: self.timestamps[start..end].to_vec(),
            columns: self.columns.iter().map(|(f, v)| (*f, v[start..end].to_vec())).collect(),
        }
    }

    /// Keeps only `features`, in that order.
    pub fn select(&self, features: &[Feature]) -> Result<SeriesFrame> {
        let columns = features
            .iter()
            .map(|&f| Ok((f, self.column(f)?.to_vec())))
            .collect::<Result<Vec<_>>>()?;
        Ok(SeriesFrame {
            timestamps: self.timestamps.clone(),
            columns,
        })
    }

    pub(crate) fn map_columns(&self, mut f: impl FnMut(Feature, &[f64]) -> Result<Vec<f64>>) -> Result<SeriesFrame> {
        let columns = self
            .columns
            .iter()
            .map(|(feat, v)| Ok((*feat, f(*feat, v)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(SeriesFrame {
            timestamps: self.timestamps.clone(),
            columns,
        })
    }

    /// Checks the physical ranges of raw (unnormalized) measurements.
    pub fn check_ranges(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (f, values) in self.columns() {
            let ok: fn(f64) -> bool = match f {
                Feature::Winddir => |v| (0.0..360.0).contains(&v),
                Feature::Hum => |v| (0.0..=100.0).contains(&v),
                Feature::Solrad | Feature::Windvel => |v| v >= 0.0,
                Feature::Temp | Feature::Airpr => |_| true,
            };
            if let Some(k) = values.iter().position(|&v| !ok(v)) {
                problems.push(format!("{f} out of range at row {k}: {}", values[k]));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Data(problems.join("; ")))
        }
    }
}

/// Fixed-width bin counts of one feature.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub feature: Feature,
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Bins a feature over its natural range (winddir 0–360, hum 0–100) or, for
/// the others, over the observed min–max. Values outside the range land in the
/// edge bins so the counts always sum to the frame length.
pub fn feature_histogram(frame: &SeriesFrame, feature: Feature, bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::config("histogram needs at least one bin"));
    }
    let values = frame.column(feature)?;
    let (lo, hi) = feature.natural_range().unwrap_or_else(|| {
        values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    });
    let mut counts = vec![0; bins];
    let width = (hi - lo) / bins as f64;
    for &v in values {
        let k = if width > 0.0 { ((v - lo) / width).floor() } else { 0.0 };
        counts[(k.max(0.0) as usize).min(bins - 1)] += 1;
    }
    Ok(Histogram { feature, lo, hi, counts })
}
