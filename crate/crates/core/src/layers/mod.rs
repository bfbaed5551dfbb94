//! Dense, simple-recurrent and LSTM layers with hand-derived backward passes,
//! and the sequential stack that chains them.
//!
//! A [`SequentialModel`] is a run of recurrent layers followed by zero or more
//! dense layers. Recurrent layers see the whole sequence; the dense head sees
//! only the output at the final timestep. Recurrent state always starts at
//! zero.

mod dense;
mod init;
mod lstm;
mod rnn;
mod sequence;

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use dense::DenseLayer;
pub use init::glorot_uniform;
pub use lstm::{Gate, GateParams, LstmCellState, LstmLayer};
pub use rnn::SimpleRnnLayer;
pub use sequence::SequenceBatch;

use crate::error::{Error, Result};
use crate::numerics::{Activation, Matrix};
use lstm::LstmStepCache;

/// One entry of a [`SequentialModel`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layer {
    Dense(DenseLayer),
    SimpleRnn {
        #[serde(flatten)]
        layer: SimpleRnnLayer,
        return_sequences: bool,
    },
    Lstm {
        #[serde(flatten)]
        layer: LstmLayer,
        return_sequences: bool,
    },
}

impl Layer {
    pub fn inputs(&self) -> usize {
        match self {
            Layer::Dense(l) => l.inputs(),
            Layer::SimpleRnn { layer, .. } => layer.inputs(),
            Layer::Lstm { layer, .. } => layer.inputs(),
        }
    }

    pub fn units(&self) -> usize {
        match self {
            Layer::Dense(l) => l.units(),
            Layer::SimpleRnn { layer, .. } => layer.units(),
            Layer::Lstm { layer, .. } => layer.units(),
        }
    }

    pub fn is_recurrent(&self) -> bool {
        !matches!(self, Layer::Dense(_))
    }

    fn return_sequences(&self) -> bool {
        match self {
            Layer::Dense(_) => false,
            Layer::SimpleRnn { return_sequences, .. } | Layer::Lstm { return_sequences, .. } => *return_sequences,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::SimpleRnn { .. } => "simple_rnn",
            Layer::Lstm { .. } => "lstm",
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Layer::Dense(l) => l.validate(),
            Layer::SimpleRnn { layer, .. } => layer.validate(),
            Layer::Lstm { layer, .. } => layer.validate(),
        }
    }

    fn params(&self) -> Vec<(ParamKind, &Matrix)> {
        match self {
            Layer::Dense(l) => vec![(ParamKind::Kernel, &l.w), (ParamKind::Bias, &l.b)],
            Layer::SimpleRnn { layer, .. } => vec![
                (ParamKind::Kernel, &layer.w_x),
                (ParamKind::Recurrent, &layer.w_y),
                (ParamKind::Bias, &layer.b),
            ],
            Layer::Lstm { layer, .. } => vec![
                (ParamKind::Kernel, &layer.kernel),
                (ParamKind::Recurrent, &layer.recurrent),
                (ParamKind::Bias, &layer.bias),
            ],
        }
    }

    fn params_mut(&mut self) -> Vec<(ParamKind, &mut Matrix)> {
        match self {
            Layer::Dense(l) => vec![(ParamKind::Kernel, &mut l.w), (ParamKind::Bias, &mut l.b)],
            Layer::SimpleRnn { layer, .. } => vec![
                (ParamKind::Kernel, &mut layer.w_x),
                (ParamKind::Recurrent, &mut layer.w_y),
                (ParamKind::Bias, &mut layer.b),
            ],
            Layer::Lstm { layer, .. } => vec![
                (ParamKind::Kernel, &mut layer.kernel),
                (ParamKind::Recurrent, &mut layer.recurrent),
                (ParamKind::Bias, &mut layer.bias),
            ],
        }
    }
}

/// Parameter groups, matching the kernel / recurrent / bias split used for
/// regularization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Kernel,
    Recurrent,
    Bias,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamId {
    pub layer: usize,
    pub kind: ParamKind,
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ParamKind::Kernel => "kernel",
            ParamKind::Recurrent => "recurrent",
            ParamKind::Bias => "bias",
        };
        write!(f, "layer{}.{}", self.layer, kind)
    }
}

/// Gradient set keyed one-to-one to a model's parameters, in
/// [`SequentialModel::parameters`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub(crate) entries: Vec<(ParamId, Matrix)>,
}

impl Gradients {
    pub fn zeros_like(model: &SequentialModel) -> Self {
        Gradients {
            entries: model
                .parameters()
                .into_iter()
                .map(|(id, m)| (id, Matrix::zeros(m.rows(), m.cols())))
                .collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Matrix)> {
        self.entries.iter().map(|(id, m)| (*id, m))
    }

    pub fn get(&self, id: ParamId) -> Option<&Matrix> {
        self.entries.iter().find(|(i, _)| *i == id).map(|(_, m)| m)
    }

    pub(crate) fn get_mut(&mut self, id: ParamId) -> Option<&mut Matrix> {
        self.entries.iter_mut().find(|(i, _)| *i == id).map(|(_, m)| m)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn global_norm(&self) -> f64 {
        self.entries.iter().map(|(_, m)| m.sum_squares()).sum::<f64>().sqrt()
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for (_, m) in &mut self.entries {
            m.scale_in_place(factor);
        }
    }

    /// Adds `other` element by element. Both sets must come from the same model.
    pub(crate) fn accumulate(&mut self, other: &Gradients) {
        debug_assert_eq!(self.entries.len(), other.entries.len());
        for ((ia, a), (ib, b)) in self.entries.iter_mut().zip(&other.entries) {
            debug_assert_eq!(ia, ib);
            a.add_in_place(b);
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.entries.iter().flat_map(|(_, m)| m.as_slice().iter().copied()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|(_, m)| m.is_finite())
    }
}

/// Declarative description of one layer, used to build freshly initialized
/// models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense {
        units: usize,
        activation: Activation,
    },
    SimpleRnn {
        units: usize,
        activation: Activation,
        return_sequences: bool,
    },
    Lstm {
        units: usize,
        activation: Activation,
        return_sequences: bool,
    },
}

/// An ordered stack of layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRecord", into = "ModelRecord")]
pub struct SequentialModel {
    layers: Vec<Layer>,
}

#[derive(Serialize, Deserialize)]
struct ModelRecord {
    layers: Vec<Layer>,
}

impl TryFrom<ModelRecord> for SequentialModel {
    type Error = Error;

    fn try_from(r: ModelRecord) -> Result<Self> {
        SequentialModel::new(r.layers)
    }
}

impl From<SequentialModel> for ModelRecord {
    fn from(m: SequentialModel) -> Self {
        ModelRecord { layers: m.layers }
    }
}

/// Per-layer activations retained by [`SequentialModel::forward_train`].
#[derive(Clone, Debug)]
enum LayerCache {
    Dense { x: Matrix, y: Matrix },
    SimpleRnn { xs: Vec<Matrix>, ys: Vec<Matrix> },
    Lstm { xs: Vec<Matrix>, steps: Vec<LstmStepCache> },
}

/// Activations from a forward pass, consumed by [`backward_sequence`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    batch: usize,
    time: usize,
    layers: Vec<LayerCache>,
}

impl ForwardCache {
    pub fn batch(&self) -> usize {
        self.batch
    }
}

/// What flows between layers during the forward pass.
enum Signal {
    Sequence(Vec<Matrix>),
    Last(Matrix),
}

impl Signal {
    fn last(self) -> Matrix {
        match self {
            Signal::Sequence(mut v) => v.pop().expect("non-empty sequence"),
            Signal::Last(m) => m,
        }
    }
}

impl SequentialModel {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let mut problems = Vec::new();
        if layers.is_empty() {
            problems.push("a model needs at least one layer".to_string());
        }
        for (k, layer) in layers.iter().enumerate() {
            if let Err(e) = layer.validate() {
                problems.push(format!("layer {k}: {e}"));
            }
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].units() != pair[1].inputs() {
                problems.push(format!(
                    "layer {k} ({}) outputs {} values but layer {} ({}) expects {}",
                    pair[0].name(),
                    pair[0].units(),
                    k + 1,
                    pair[1].name(),
                    pair[1].inputs()
                ));
            }
            if !pair[0].is_recurrent() && pair[1].is_recurrent() {
                problems.push(format!("recurrent layer {} follows a dense layer", k + 1));
            }
            if pair[0].is_recurrent() && pair[1].is_recurrent() && !pair[0].return_sequences() {
                problems.push(format!(
                    "layer {k} drops the sequence but recurrent layer {} needs it",
                    k + 1
                ));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        Ok(SequentialModel { layers })
    }

    /// Builds a freshly initialized model from layer specs.
    pub fn build(inputs: usize, specs: &[LayerSpec], seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut width = inputs;
        let mut layers = Vec::with_capacity(specs.len());
        for spec in specs {
            let layer = match *spec {
                LayerSpec::Dense { units, activation } => Layer::Dense(DenseLayer::init(&mut rng, width, units, activation)),
                LayerSpec::SimpleRnn {
                    units,
                    activation,
                    return_sequences,
                } => Layer::SimpleRnn {
                    layer: SimpleRnnLayer::init(&mut rng, width, units, activation),
                    return_sequences,
                },
                LayerSpec::Lstm {
                    units,
                    activation,
                    return_sequences,
                } => Layer::Lstm {
                    layer: LstmLayer::init(&mut rng, width, units, activation),
                    return_sequences,
                },
            };
            width = layer.units();
            layers.push(layer);
        }
        SequentialModel::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, Layer::units)
    }

    pub fn parameters(&self) -> Vec<(ParamId, &Matrix)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(layer, l)| l.params().into_iter().map(move |(kind, m)| (ParamId { layer, kind }, m)))
            .collect()
    }

    pub(crate) fn parameters_mut(&mut self) -> Vec<(ParamId, &mut Matrix)> {
        self.layers
            .iter_mut()
            .enumerate()
            .flat_map(|(layer, l)| l.params_mut().into_iter().map(move |(kind, m)| (ParamId { layer, kind }, m)))
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|(_, m)| m.len()).sum()
    }

    /// Index of the first LSTM layer, if any.
    pub fn first_lstm(&self) -> Option<usize> {
        self.layers.iter().position(|l| matches!(l, Layer::Lstm { .. }))
    }

    pub fn flat_parameters(&self) -> Vec<f64> {
        self.parameters().iter().flat_map(|(_, m)| m.as_slice().iter().copied()).collect()
    }

    pub fn set_flat_parameters(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.parameter_count() {
            return Err(Error::Shape {
                op: "set_flat_parameters",
                left: (self.parameter_count(), 1),
                right: (values.len(), 1),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("set_flat_parameters".into()));
        }
        let mut offset = 0;
        for (_, m) in self.parameters_mut() {
            let n = m.len();
            m.as_mut_slice().copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    fn check_input(&self, x: &SequenceBatch) -> Result<()> {
        if x.time() == 0 {
            return Err(Error::Data("cannot run a model over an empty sequence".into()));
        }
        if x.batch() == 0 {
            return Err(Error::Data("cannot run a model over an empty batch".into()));
        }
        if x.features() != self.input_width() {
            return Err(Error::Shape {
                op: "forward_sequence input",
                left: (x.time(), x.features()),
                right: (x.time(), self.input_width()),
            });
        }
        Ok(())
    }

    /// Inference forward pass; returns `batch × output_width`.
    pub fn forward(&self, x: &SequenceBatch) -> Result<Matrix> {
        self.check_input(x)?;
        let mut signal = Signal::Sequence(x.time_major());
        for layer in &self.layers {
            signal = match layer {
                Layer::Dense(l) => {
                    let mut y = signal.last().matmul(&l.w)?;
                    y.add_row_in_place(&l.b);
                    l.activation.apply_in_place(&mut y);
                    Signal::Last(y)
                }
                Layer::SimpleRnn { layer, return_sequences } => {
                    let Signal::Sequence(xs) = signal else { unreachable!() };
                    let mut outs = Vec::with_capacity(if *return_sequences { xs.len() } else { 1 });
                    let mut prev: Option<Matrix> = None;
                    for x_t in &xs {
                        let y = layer.step_unchecked(x_t, prev.as_ref());
                        if *return_sequences {
                            outs.push(y.clone());
                        }
                        prev = Some(y);
                    }
                    let last = prev.expect("time >= 1");
                    if *return_sequences {
                        Signal::Sequence(outs)
                    } else {
                        Signal::Last(last)
                    }
                }
                Layer::Lstm { layer, return_sequences } => {
                    let Signal::Sequence(xs) = signal else { unreachable!() };
                    let mut outs = Vec::with_capacity(if *return_sequences { xs.len() } else { 1 });
                    let mut state: Option<(Matrix, Matrix)> = None;
                    for x_t in &xs {
                        let s = layer.step_unchecked(x_t, state.as_ref().map(|(h, c)| (h, c)));
                        if *return_sequences {
                            outs.push(s.h.clone());
                        }
                        state = Some((s.h, s.c));
                    }
                    let (h, _) = state.expect("time >= 1");
                    if *return_sequences {
                        Signal::Sequence(outs)
                    } else {
                        Signal::Last(h)
                    }
                }
            };
        }
        signal.last().ensure_finite("forward_sequence")
    }

    /// Forward pass that retains every activation needed for backpropagation.
    pub fn forward_train(&self, x: &SequenceBatch) -> Result<(Matrix, ForwardCache)> {
        self.check_input(x)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut signal = Signal::Sequence(x.time_major());
        for layer in &self.layers {
            signal = match layer {
                Layer::Dense(l) => {
                    let x_last = signal.last();
                    let mut y = x_last.matmul(&l.w)?;
                    y.add_row_in_place(&l.b);
                    l.activation.apply_in_place(&mut y);
                    caches.push(LayerCache::Dense { x: x_last, y: y.clone() });
                    Signal::Last(y)
                }
                Layer::SimpleRnn { layer, return_sequences } => {
                    let Signal::Sequence(xs) = signal else { unreachable!() };
                    let mut ys: Vec<Matrix> = Vec::with_capacity(xs.len());
                    for x_t in &xs {
                        let y = layer.step_unchecked(x_t, ys.last());
                        ys.push(y);
                    }
                    let out = if *return_sequences {
                        Signal::Sequence(ys.clone())
                    } else {
                        Signal::Last(ys.last().expect("time >= 1").clone())
                    };
                    caches.push(LayerCache::SimpleRnn { xs, ys });
                    out
                }
                Layer::Lstm { layer, return_sequences } => {
                    let Signal::Sequence(xs) = signal else { unreachable!() };
                    let mut steps: Vec<LstmStepCache> = Vec::with_capacity(xs.len());
                    for x_t in &xs {
                        let s = layer.step_unchecked(x_t, steps.last().map(|p| (&p.h, &p.c)));
                        steps.push(s);
                    }
                    let out = if *return_sequences {
                        Signal::Sequence(steps.iter().map(|s| s.h.clone()).collect())
                    } else {
                        Signal::Last(steps.last().expect("time >= 1").h.clone())
                    };
                    caches.push(LayerCache::Lstm { xs, steps });
                    out
                }
            };
        }
        let out = signal.last().ensure_finite("forward_sequence")?;
        Ok((
            out,
            ForwardCache {
                batch: x.batch(),
                time: x.time(),
                layers: caches,
            },
        ))
    }

    /// Exact gradients of the loss with respect to every parameter, given
    /// `d_output = dLoss/dOutput` for the forward pass recorded in `cache`.
    pub fn backward(&self, cache: &ForwardCache, d_output: &Matrix) -> Result<Gradients> {
        if cache.layers.len() != self.layers.len() {
            return Err(Error::Cache(format!(
                "cache has {} layers, model has {}",
                cache.layers.len(),
                self.layers.len()
            )));
        }
        if d_output.shape() != (cache.batch, self.output_width()) {
            return Err(Error::Shape {
                op: "backward_sequence upstream gradient",
                left: d_output.shape(),
                right: (cache.batch, self.output_width()),
            });
        }
        let mut grads = Gradients::zeros_like(self);
        let mut offset = grads.entries.len();
        // Gradient w.r.t. the signal leaving the layer being processed.
        let mut upstream: Vec<Option<Matrix>> = vec![Some(d_output.clone())];
        for (k, (layer, lc)) in self.layers.iter().zip(&cache.layers).enumerate().rev() {
            let n_params = layer.params().len();
            offset -= n_params;
            let want_dx = k > 0;
            let mut group: Vec<Matrix> = grads.entries[offset..offset + n_params]
                .iter_mut()
                .map(|(_, m)| std::mem::replace(m, Matrix::zeros(0, 0)))
                .collect();
            upstream = match (layer, lc) {
                (Layer::Dense(l), LayerCache::Dense { x, y }) => {
                    let dy = upstream.pop().flatten().expect("dense layers receive a last-step gradient");
                    let (dw, db) = group.split_at_mut(1);
                    let dx = l.backward(x, y, &dy, &mut dw[0], &mut db[0], want_dx);
                    dx.map(|d| vec![Some(d)]).unwrap_or_default()
                }
                (Layer::SimpleRnn { layer, .. }, LayerCache::SimpleRnn { xs, ys }) => {
                    let dys = spread(upstream, xs.len(), cache.time)?;
                    layer.backward(xs, ys, &dys, &mut group, want_dx).into_iter().map(Some).collect()
                }
                (Layer::Lstm { layer, .. }, LayerCache::Lstm { xs, steps }) => {
                    let dhs = spread(upstream, xs.len(), cache.time)?;
                    layer.backward(xs, steps, &dhs, &mut group, want_dx).into_iter().map(Some).collect()
                }
                _ => return Err(Error::Cache(format!("layer {k} kind does not match its cache entry"))),
            };
            for ((_, slot), g) in grads.entries[offset..offset + n_params].iter_mut().zip(group) {
                *slot = g;
            }
        }
        if !grads.is_finite() {
            return Err(Error::NonFinite("backward_sequence".into()));
        }
        Ok(grads)
    }
}

/// Aligns an upstream gradient with the timesteps of a recurrent layer. A
/// single matrix is the gradient of the final step only.
fn spread(upstream: Vec<Option<Matrix>>, steps: usize, time: usize) -> Result<Vec<Option<Matrix>>> {
    if steps != time {
        return Err(Error::Cache(format!("cached {steps} timesteps, expected {time}")));
    }
    if upstream.len() == steps {
        return Ok(upstream);
    }
    if upstream.len() == 1 {
        let mut v = vec![None; steps];
        v[steps - 1] = upstream.into_iter().next().flatten();
        return Ok(v);
    }
    Err(Error::Cache(format!(
        "upstream gradient covers {} timesteps, layer has {steps}",
        upstream.len()
    )))
}

pub fn rnn_step(layer: &SimpleRnnLayer, x_t: &Matrix, y_prev: &Matrix) -> Result<Matrix> {
    layer.step(x_t, y_prev)
}

pub fn lstm_step(layer: &LstmLayer, x_t: &Matrix, state: &LstmCellState) -> Result<(Matrix, LstmCellState)> {
    layer.step(x_t, state)
}

pub fn forward_sequence(model: &SequentialModel, x: &SequenceBatch) -> Result<Matrix> {
    model.forward(x)
}

pub fn backward_sequence(model: &SequentialModel, cache: &ForwardCache, d_output: &Matrix) -> Result<Gradients> {
    model.backward(cache, d_output)
}

#[cfg(test)]
mod tests;
