//! Multi-step forecasts in °C, accuracy metrics and report emission.

mod metrics;
mod plot;

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

pub use metrics::{mae, max_error, max_error_at, rmse};
pub use plot::{emit_forecast_plot, emit_loss_plot, forecast_csv, forecast_svg, loss_svg};

use crate::data::{Feature, NormalizationStats, SeriesFrame, WindowedDataset};
use crate::error::{Error, Result};
use crate::layers::{SequenceBatch, SequentialModel};
use crate::numerics::Matrix;
use crate::parallel::map_ordered;

/// One forecast against the truth, all in °C.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    /// First forecast hour.
    pub origin: NaiveDateTime,
    pub history: Vec<f64>,
    pub predicted: Vec<f64>,
    pub actual: Vec<f64>,
}

impl ForecastResult {
    pub fn horizon(&self) -> usize {
        self.predicted.len()
    }

    pub fn rmse(&self) -> Result<f64> {
        rmse(&self.predicted, &self.actual)
    }
}

/// Predicts the next K temperatures (°C) from a raw `H × F` window.
pub fn forecast(model: &SequentialModel, window: &Matrix, features: &[Feature], stats: &NormalizationStats) -> Result<Vec<f64>> {
    if window.cols() != features.len() || features.len() != model.input_width() {
        return Err(Error::Shape {
            op: "forecast window",
            left: window.shape(),
            right: (window.rows(), model.input_width()),
        });
    }
    let mut z = Vec::with_capacity(window.len());
    for r in 0..window.rows() {
        for (c, &f) in features.iter().enumerate() {
            z.push(stats.normalize_value(f, window.get(r, c))?);
        }
    }
    let out = model.forward(&SequenceBatch::new(1, window.rows(), features.len(), z)?)?;
    out.as_slice().iter().map(|&v| stats.denormalize_value(Feature::Temp, v)).collect()
}

/// Forecast for the window whose first predicted hour is row `origin` of a
/// raw frame.
pub fn forecast_at(
    model: &SequentialModel,
    frame: &SeriesFrame,
    features: &[Feature],
    history: usize,
    stats: &NormalizationStats,
    origin: usize,
) -> Result<ForecastResult> {
    let k = model.output_width();
    if origin < history {
        return Err(Error::Data(format!("only {origin} hours precede the forecast origin but {history} are needed")));
    }
    if origin + k > frame.len() {
        return Err(Error::Data(format!(
            "forecast origin {} leaves fewer than {k} hours of data to compare against",
            frame.timestamps().get(origin).map_or_else(|| format!("row {origin}"), |t| t.to_string())
        )));
    }
    let cols = features.iter().map(|&f| frame.column(f)).collect::<Result<Vec<_>>>()?;
    let mut data = Vec::with_capacity(history * features.len());
    for r in origin - history..origin {
        data.extend(cols.iter().map(|c| c[r]));
    }
    let window = Matrix::from_vec(history, features.len(), data)?;
    let temp = frame.column(Feature::Temp)?;
    Ok(ForecastResult {
        origin: frame.timestamps()[origin],
        history: temp[origin - history..origin].to_vec(),
        predicted: forecast(model, &window, features, stats)?,
        actual: temp[origin..origin + k].to_vec(),
    })
}

/// Accuracy over a test set, in °C. RMSE and MAE are means of per-window
/// values, ME is the largest per-window maximum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub model: String,
    pub horizon: usize,
    pub windows: usize,
    pub rmse: f64,
    pub mae: f64,
    pub me: f64,
    pub p50_rmse: f64,
    pub p90_rmse: f64,
}

impl AccuracyReport {
    pub const CSV_HEADER: &'static str = "model,K,rmse,mae,me,p50_rmse,p90_rmse";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.model, self.horizon, self.rmse, self.mae, self.me, self.p50_rmse, self.p90_rmse
        )
    }

    /// Appends a row, writing the header first if the file is new or empty.
    pub fn append_to(&self, path: &Path) -> Result<()> {
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        if file.metadata()?.len() == 0 {
            writeln!(file, "{}", Self::CSV_HEADER)?;
        }
        writeln!(file, "{}", self.csv_row())?;
        Ok(())
    }
}

/// Nearest-rank percentile of an ascending slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Per-window metrics over every window of a normalized test set.
pub fn evaluate_model(model: &SequentialModel, test: &WindowedDataset, stats: &NormalizationStats, label: &str) -> Result<AccuracyReport> {
    if test.is_empty() {
        return Err(Error::Data("cannot evaluate on an empty test set".into()));
    }
    let (mean, std) = (stats.mean_of(Feature::Temp)?, stats.std_of(Feature::Temp)?);
    let idx: Vec<usize> = (0..test.len()).collect();
    let parts = map_ordered(idx.chunks(128).collect(), |chunk| -> Result<Vec<(f64, f64, f64)>> {
        let (x, y) = test.batch(chunk);
        let pred = model.forward(&x)?;
        let k = test.horizon();
        (0..chunk.len())
            .map(|r| {
                let p: Vec<f64> = pred.row(r).iter().map(|z| z * std + mean).collect();
                let a: Vec<f64> = y.as_slice()[r * k..(r + 1) * k].iter().map(|z| z * std + mean).collect();
                Ok((rmse(&p, &a)?, mae(&p, &a)?, max_error(&p, &a)?))
            })
            .collect()
    });
    let mut per_window = Vec::with_capacity(test.len());
    for p in parts {
        per_window.extend(p?);
    }
    let n = per_window.len() as f64;
    let mut rmses: Vec<f64> = per_window.iter().map(|w| w.0).collect();
    rmses.sort_by(f64::total_cmp);
    Ok(AccuracyReport {
        model: label.to_string(),
        horizon: test.horizon(),
        windows: per_window.len(),
        rmse: per_window.iter().map(|w| w.0).sum::<f64>() / n,
        mae: per_window.iter().map(|w| w.1).sum::<f64>() / n,
        me: per_window.iter().fold(0.0, |m, w| m.max(w.2)),
        p50_rmse: percentile(&rmses, 0.5),
        p90_rmse: percentile(&rmses, 0.9),
    })
}

#[cfg(test)]
mod tests {
    use chrono::{Duration, NaiveDate};

    use super::*;
    use crate::data::{generate_synthetic, make_windows, SyntheticWeatherSpec};
    use crate::layers::{DenseLayer, Layer};
    use crate::numerics::Activation;

    fn zero_head(inputs: usize, k: usize) -> SequentialModel {
        let dense = DenseLayer::new(Matrix::zeros(inputs, k), Matrix::zeros(1, k), Activation::Linear).unwrap();
        SequentialModel::new(vec![Layer::Dense(dense)]).unwrap()
    }

    fn frame(temp: Vec<f64>) -> SeriesFrame {
        let t0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let ts = (0..temp.len()).map(|i| t0 + Duration::hours(i as i64)).collect();
        SeriesFrame::new(ts, vec![(Feature::Temp, temp)]).unwrap()
    }

    #[test]
    fn zero_output_forecasts_the_training_mean() {
        let f = frame((0..50).map(|i| (i as f64 * 0.3).sin() * 5.0 + 12.0).collect());
        let stats = NormalizationStats::fit(&f).unwrap();
        let model = zero_head(1, 12);
        let r = forecast_at(&model, &f, &[Feature::Temp], 24, &stats, 30).unwrap();
        assert_eq!(r.predicted.len(), 12);
        for p in &r.predicted {
            assert!((p - stats.mean[0]).abs() < 1e-12);
        }
        assert_eq!(r.actual, f.column(Feature::Temp).unwrap()[30..42].to_vec());
        assert_eq!(r.history.len(), 24);
    }

    #[test]
    fn forecast_rejects_bad_windows_and_origins() {
        let f = frame((0..30).map(|i| i as f64).collect());
        let stats = NormalizationStats::fit(&f).unwrap();
        let model = zero_head(1, 4);
        assert!(forecast(&model, &Matrix::zeros(5, 2), &[Feature::Temp, Feature::Hum], &stats).is_err());
        assert!(forecast_at(&model, &f, &[Feature::Temp], 10, &stats, 5).is_err());
        assert!(forecast_at(&model, &f, &[Feature::Temp], 10, &stats, 28).is_err());
    }

    #[test]
    fn perfect_predictions_score_zero() {
        // Alternating ±1: the next value is minus the last one, which a
        // one-weight dense head on the last timestep reproduces exactly.
        let f = frame((0..40).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect());
        let stats = NormalizationStats::fit(&f).unwrap();
        let z = stats.normalize(&f).unwrap();
        let ds = make_windows(&z, &[Feature::Temp], 3, 1).unwrap();
        let dense = DenseLayer::new(Matrix::filled(1, 1, -1.0).unwrap(), Matrix::zeros(1, 1), Activation::Linear).unwrap();
        let model = SequentialModel::new(vec![Layer::Dense(dense)]).unwrap();
        let r = evaluate_model(&model, &ds, &stats, "perfect").unwrap();
        assert_eq!((r.rmse, r.mae, r.me), (0.0, 0.0, 0.0));
        assert_eq!(r.windows, ds.len());
    }

    #[test]
    fn mean_predictor_on_a_sinusoid_scores_its_rms_amplitude() {
        // Each 24-hour target spans one full diurnal period, so every window's
        // RMSE against the mean is the sinusoid's RMS amplitude.
        let mut spec = SyntheticWeatherSpec::reference(1, 1).noiseless();
        spec.seasonal_amplitude = 0.0;
        let f = generate_synthetic(&spec).unwrap().select(&[Feature::Temp]).unwrap();
        let stats = NormalizationStats::fit(&f).unwrap();
        let ds = make_windows(&stats.normalize(&f).unwrap(), &[Feature::Temp], 24, 24).unwrap();
        let r = evaluate_model(&zero_head(1, 24), &ds, &stats, "mean").unwrap();
        let expect = spec.diurnal_amplitude / 2f64.sqrt();
        assert!((r.rmse - expect).abs() < 0.01 * expect, "{} vs {expect}", r.rmse);
        assert!(r.me >= r.mae && r.rmse >= r.mae);
        assert!(r.p50_rmse <= r.p90_rmse);
    }

    #[test]
    fn metrics_rows_append_with_one_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        let r = AccuracyReport {
            model: "run3-12hour".into(),
            horizon: 12,
            windows: 10,
            rmse: 0.25,
            mae: 0.2,
            me: 0.5,
            p50_rmse: 0.24,
            p90_rmse: 0.3,
        };
        r.append_to(&path).unwrap();
        r.append_to(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], AccuracyReport::CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "run3-12hour,12,0.250000,0.200000,0.500000,0.240000,0.300000");
    }

    #[test]
    fn percentile_nearest_rank() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        assert_eq!(percentile(&v, 0.5), 5.0);
        assert_eq!(percentile(&v, 0.9), 9.0);
        assert_eq!(percentile(&[3.0], 0.9), 3.0);
    }
}
