//! Loss, L2 regularization, Adam and the epoch/batch training loop.

mod adam;
mod config;
mod history;
mod loss;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use adam::{adam_step, AdamState};
pub use config::{forecaster_architecture, ExperimentConfig, L2Coefficients, Override, Preset, Scale};
pub use history::{detect_overfitting, Diagnosis, LossHistory, OverfitRule};
pub use loss::{add_l2_gradient, l2_penalty, mse};

use crate::data::{chronological_split, make_windows, NormalizationStats, SeriesFrame, WindowedDataset};
use crate::error::{Error, Result};
use crate::layers::{Gradients, SequentialModel};
use crate::parallel::map_ordered;

/// Windows per gradient work unit. Fixed so that the reduction order, and
/// therefore every bit of the result, is independent of the thread count.
pub const GRADIENT_CHUNK: usize = 16;
const EVAL_CHUNK: usize = 128;

/// Train/test windows built from one raw frame.
#[derive(Clone, Debug)]
pub struct ExperimentData {
    pub stats: NormalizationStats,
    pub train: WindowedDataset,
    pub test: WindowedDataset,
    /// First row of the test split in the source frame.
    pub boundary: usize,
}

impl ExperimentData {
    /// Splits chronologically, fits z-score stats on the training rows only
    /// and windows both halves with the configured features.
    pub fn prepare(frame: &SeriesFrame, config: &ExperimentConfig) -> Result<Self> {
        let (train, test) = chronological_split(frame, config.train_fraction)?;
        let mut columns = config.features.clone();
        if !columns.contains(&crate::data::Feature::Temp) {
            columns.push(crate::data::Feature::Temp);
        }
        let train = train.select(&columns)?;
        let test = test.select(&columns)?;
        let stats = NormalizationStats::fit(&train)?;
        let boundary = train.len();
        Ok(ExperimentData {
            train: make_windows(&stats.normalize(&train)?, &config.features, config.history, config.horizon)?,
            test: make_windows(&stats.normalize(&test)?, &config.features, config.history, config.horizon)?,
            stats,
            boundary,
        })
    }
}

/// Fresh model for a config, initialized from its seed.
pub fn build_model(config: &ExperimentConfig) -> Result<SequentialModel> {
    config.validate()?;
    SequentialModel::build(config.features.len(), &config.architecture, config.seed)
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: SequentialModel,
    pub history: LossHistory,
    pub steps: u64,
}

/// Mean squared error over every `stride`-th window, in normalized units.
pub fn dataset_mse(model: &SequentialModel, ds: &WindowedDataset, stride: usize) -> Result<f64> {
    let idx: Vec<usize> = (0..ds.len()).step_by(stride.max(1)).collect();
    if idx.is_empty() {
        return Err(Error::Data("cannot evaluate on an empty dataset".into()));
    }
    let parts = map_ordered(idx.chunks(EVAL_CHUNK).collect(), |chunk| -> Result<f64> {
        let (x, y) = ds.batch(chunk);
        let pred = model.forward(&x)?;
        Ok(pred.sub(&y)?.sum_squares())
    });
    let mut sse = 0.0;
    for p in parts {
        sse += p?;
    }
    Ok(sse / (idx.len() * ds.horizon()) as f64)
}

/// Loss and gradient of one batch: `mse + l2_penalty`.
pub fn batch_gradient(
    model: &SequentialModel,
    ds: &WindowedDataset,
    indices: &[usize],
    config: &ExperimentConfig,
) -> Result<(f64, Gradients)> {
    let scale = 2.0 / (indices.len() * ds.horizon()) as f64;
    let parts = map_ordered(indices.chunks(GRADIENT_CHUNK).collect(), |chunk| -> Result<(f64, Gradients)> {
        let (x, y) = ds.batch(chunk);
        let (pred, cache) = model.forward_train(&x)?;
        let diff = pred.sub(&y)?;
        let sse = diff.sum_squares();
        let grads = model.backward(&cache, &diff.scale(scale)?)?;
        Ok((sse, grads))
    });
    let mut total = Gradients::zeros_like(model);
    let mut sse = 0.0;
    for part in parts {
        let (s, g) = part?;
        sse += s;
        total.accumulate(&g);
    }
    add_l2_gradient(model, &config.l2, &mut total);
    let loss = sse / (indices.len() * ds.horizon()) as f64 + l2_penalty(model, &config.l2);
    Ok((loss, total))
}

/// Trains for `config.epochs` epochs of `config.evaluation_interval` batches.
pub fn train(
    model: SequentialModel,
    config: &ExperimentConfig,
    train_ds: &WindowedDataset,
    val_ds: &WindowedDataset,
) -> Result<TrainOutcome> {
    train_with(model, config, train_ds, val_ds, |_, _, _| {})
}

/// As [`train`], calling `on_epoch(epoch, train_mse, val_mse)` after each
/// epoch (1-based).
pub fn train_with(
    mut model: SequentialModel,
    config: &ExperimentConfig,
    train_ds: &WindowedDataset,
    val_ds: &WindowedDataset,
    mut on_epoch: impl FnMut(usize, f64, f64),
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_ds.is_empty() || val_ds.is_empty() {
        return Err(Error::Data("training and validation sets must be non-empty".into()));
    }
    for ds in [train_ds, val_ds] {
        if ds.history() != config.history || ds.horizon() != config.horizon || ds.features() != config.features.as_slice() {
            return Err(Error::Data(format!(
                "dataset windows (H={}, K={}, {:?}) do not match the config (H={}, K={}, {:?})",
                ds.history(),
                ds.horizon(),
                ds.features(),
                config.history,
                config.horizon,
                config.features
            )));
        }
    }
    if model.input_width() != config.features.len() || model.output_width() != config.horizon {
        return Err(Error::config(format!(
            "model maps {} inputs to {} outputs but the config needs {} to {}",
            model.input_width(),
            model.output_width(),
            config.features.len(),
            config.horizon
        )));
    }

    // Separate stream from the weight initializer.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let batch = config.batch_size.min(train_ds.len());
    let mut order: Vec<usize> = (0..train_ds.len()).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0;

    let mut params = model.flat_parameters();
    let mut adam = AdamState::new(params.len());
    let mut history = LossHistory::default();
    for epoch in 1..=config.epochs {
        for _ in 0..config.evaluation_interval {
            if cursor + batch > order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            let (loss, mut grads) = batch_gradient(&model, train_ds, &order[cursor..cursor + batch], config).map_err(|e| match e {
                Error::NonFinite(_) => Error::Divergence { epoch, loss: f64::NAN },
                e => e,
            })?;
            cursor += batch;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            let norm = grads.global_norm();
            if config.clip_norm > 0.0 && norm > config.clip_norm {
                grads.scale(config.clip_norm / norm);
            }
            adam_step(&mut params, &grads.flatten(), &mut adam, config.learning_rate)?;
            if params.iter().any(|p| !p.is_finite()) {
                return Err(Error::Divergence { epoch, loss: f64::NAN });
            }
            model.set_flat_parameters(&params)?;
        }
        let train_mse = dataset_mse(&model, train_ds, config.eval_stride)?;
        let val_mse = dataset_mse(&model, val_ds, config.eval_stride)?;
        if !train_mse.is_finite() || !val_mse.is_finite() {
            return Err(Error::Divergence {
                epoch,
                loss: if train_mse.is_finite() { val_mse } else { train_mse },
            });
        }
        history.push(train_mse, val_mse);
        on_epoch(epoch, train_mse, val_mse);
    }
    Ok(TrainOutcome {
        model,
        history,
        steps: adam.t,
    })
}
