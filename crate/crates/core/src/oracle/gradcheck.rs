use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{finite_diff_gradient, relative_error};
use crate::error::Result;
use crate::layers::{LayerSpec, ParamId, ParamKind, SequenceBatch, SequentialModel};
use crate::numerics::{Activation, Matrix};

/// Worst-case agreement between analytic and numeric gradients for one
/// parameter matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamCheck {
    pub param: String,
    pub max_rel: f64,
    pub max_abs: f64,
    /// Flat index of the coordinate with the largest relative error.
    pub worst: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl ParamCheck {
    /// Passes when the relative error is within `rel_tol`, or the absolute
    /// error is below `abs_floor` (for coordinates whose true gradient is ~0).
    pub fn passes(&self, rel_tol: f64, abs_floor: f64) -> bool {
        self.max_rel <= rel_tol || self.max_abs <= abs_floor
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradCheckReport {
    pub label: String,
    pub entries: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn passes(&self, rel_tol: f64, abs_floor: f64) -> bool {
        self.entries.iter().all(|e| e.passes(rel_tol, abs_floor))
    }

    pub fn failures(&self, rel_tol: f64, abs_floor: f64) -> impl Iterator<Item = &ParamCheck> {
        self.entries.iter().filter(move |e| !e.passes(rel_tol, abs_floor))
    }

    pub fn max_rel(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.max_rel))
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.label)?;
        writeln!(f, "  {:<18} {:>12} {:>12} {:>6}", "parameter", "max rel", "max abs", "worst")?;
        for e in &self.entries {
            writeln!(f, "  {:<18} {:>12.3e} {:>12.3e} {:>6}", e.param, e.max_rel, e.max_abs, e.worst)?;
        }
        Ok(())
    }
}

/// Per-coordinate comparison under the loss `½·Σ(pred − target)²`.
///
/// The analytic side calls the model's own backward pass; the numeric side
/// only ever evaluates the forward pass.
pub fn check_model_gradients(
    model: &SequentialModel,
    x: &SequenceBatch,
    target: &Matrix,
    eps: f64,
    fault: Option<Fault>,
) -> Result<GradCheckReport> {
    let (pred, cache) = model.forward_train(x)?;
    let d_out = pred.sub(target)?;
    let mut analytic = model.backward(&cache, &d_out)?;
    if let Some(fault) = fault {
        fault.apply(model, &mut analytic);
    }

    let base = model.flat_parameters();
    let mut probe = model.clone();
    let numeric = finite_diff_gradient(
        |p| {
            probe.set_flat_parameters(p).expect("probe parameters stay finite");
            let out = probe.forward(x).expect("probe forward");
            0.5 * out.sub(target).expect("same shape").sum_squares()
        },
        &base,
        eps,
    )?;

    let mut entries = Vec::new();
    let mut offset = 0;
    for (id, g) in analytic.iter() {
        let n = g.len();
        let mut check = ParamCheck {
            param: format!("{}({})", id, layer_name(model, id)),
            max_rel: 0.0,
            max_abs: 0.0,
            worst: 0,
            analytic: 0.0,
            numeric: 0.0,
        };
        for (k, (&a, &b)) in g.as_slice().iter().zip(&numeric[offset..offset + n]).enumerate() {
            let rel = relative_error(a, b);
            check.max_abs = check.max_abs.max((a - b).abs());
            if rel > check.max_rel || k == 0 {
                check.max_rel = check.max_rel.max(rel);
                check.worst = k;
                check.analytic = a;
                check.numeric = b;
            }
        }
        offset += n;
        entries.push(check);
    }
    Ok(GradCheckReport {
        label: String::new(),
        entries,
    })
}

fn layer_name(model: &SequentialModel, id: ParamId) -> &'static str {
    use crate::layers::Layer;
    match model.layers()[id.layer] {
        Layer::Dense(_) => "dense",
        Layer::SimpleRnn { .. } => "simple_rnn",
        Layer::Lstm { .. } => "lstm",
    }
}

/// Deliberate corruption of an analytic gradient, for verifying that the
/// checker actually catches a broken backward pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fault {
    pub kind: CheckKind,
    pub param: ParamKind,
}

impl Fault {
    fn apply(self, model: &SequentialModel, grads: &mut crate::layers::Gradients) {
        use crate::layers::Layer;
        let target = model.layers().iter().position(|l| {
            matches!(
                (self.kind, l),
                (CheckKind::Dense, Layer::Dense(_))
                    | (CheckKind::SimpleRnn, Layer::SimpleRnn { .. })
                    | (CheckKind::Lstm, Layer::Lstm { .. })
            )
        });
        if let Some(layer) = target {
            if let Some(g) = grads.get_mut(ParamId { layer, kind: self.param }) {
                for v in g.as_mut_slice() {
                    *v = *v * 1.5 + 1e-3;
                }
            }
        }
    }
}

/// Which layer family a random check case exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CheckKind {
    Dense,
    SimpleRnn,
    Lstm,
}

impl CheckKind {
    pub const ALL: [CheckKind; 3] = [CheckKind::Dense, CheckKind::SimpleRnn, CheckKind::Lstm];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Dense => "dense",
            CheckKind::SimpleRnn => "simple_rnn",
            CheckKind::Lstm => "lstm",
        }
    }
}

/// A small random model with matching input and target.
#[derive(Clone, Debug)]
pub struct CheckCase {
    pub model: SequentialModel,
    pub x: SequenceBatch,
    pub target: Matrix,
}

/// Builds a random configuration with at most 4 units, 3 timesteps and a
/// batch of 2.
pub fn random_check_case(kind: CheckKind, seed: u64) -> Result<CheckCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let features = rng.random_range(1..=3);
    let time = rng.random_range(1..=3);
    let batch = rng.random_range(1..=2);
    let out = rng.random_range(1..=3);
    let smooth = [Activation::Tanh, Activation::Sigmoid, Activation::Linear];
    let pick = |rng: &mut ChaCha8Rng| smooth[rng.random_range(0..smooth.len())];

    let specs = match kind {
        CheckKind::Dense => {
            let hidden = rng.random_range(1..=4);
            let head = if rng.random_bool(0.3) { Activation::Softmax } else { pick(&mut rng) };
            vec![
                LayerSpec::Dense {
                    units: hidden,
                    activation: pick(&mut rng),
                },
                LayerSpec::Dense {
                    units: out,
                    activation: head,
                },
            ]
        }
        CheckKind::SimpleRnn => {
            let u1 = rng.random_range(1..=4);
            let u2 = rng.random_range(1..=4);
            vec![
                LayerSpec::SimpleRnn {
                    units: u1,
                    activation: pick(&mut rng),
                    return_sequences: true,
                },
                LayerSpec::SimpleRnn {
                    units: u2,
                    activation: pick(&mut rng),
                    return_sequences: false,
                },
                LayerSpec::Dense {
                    units: out,
                    activation: Activation::Linear,
                },
            ]
        }
        CheckKind::Lstm => {
            let u1 = rng.random_range(1..=4);
            let u2 = rng.random_range(1..=4);
            // The second layer alternates between tanh and relu cells, the
            // latter matching the forecasting architecture.
            let second = if seed % 2 == 0 { Activation::ReLU } else { Activation::Tanh };
            vec![
                LayerSpec::Lstm {
                    units: u1,
                    activation: Activation::Tanh,
                    return_sequences: true,
                },
                LayerSpec::Lstm {
                    units: u2,
                    activation: second,
                    return_sequences: false,
                },
                LayerSpec::Dense {
                    units: out,
                    activation: Activation::Linear,
                },
            ]
        }
    };
    let mut model = SequentialModel::build(features, &specs, rng.random())?;
    // Perturb every parameter (biases included) away from its initializer so
    // that no gradient is trivially zero.
    let params: Vec<f64> = model
        .flat_parameters()
        .iter()
        .map(|v| v + rng.random_range(-0.5..0.5))
        .collect();
    model.set_flat_parameters(&params)?;
    let x = SequenceBatch::new(
        batch,
        time,
        features,
        (0..batch * time * features).map(|_| rng.random_range(-1.5..1.5)).collect(),
    )?;
    let target = Matrix::from_vec(batch, out, (0..batch * out).map(|_| rng.random_range(-1.0..1.0)).collect())?;
    Ok(CheckCase { model, x, target })
}

/// Outcome of the whole gradient-check sweep.
#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub reports: Vec<GradCheckReport>,
    pub rel_tol: f64,
    pub abs_floor: f64,
}

impl SuiteReport {
    pub fn passes(&self) -> bool {
        self.reports.iter().all(|r| r.passes(self.rel_tol, self.abs_floor))
    }

    pub fn failures(&self) -> Vec<(&str, &ParamCheck)> {
        self.reports
            .iter()
            .flat_map(|r| r.failures(self.rel_tol, self.abs_floor).map(move |e| (r.label.as_str(), e)))
            .collect()
    }
}

/// Gradient-checks every layer family over `seeds` random configurations.
pub fn run_gradient_suite(seeds: u64, eps: f64, fault: Option<Fault>) -> Result<SuiteReport> {
    let mut reports = Vec::new();
    for kind in CheckKind::ALL {
        for seed in 0..seeds {
            let case = random_check_case(kind, seed)?;
            let mut report = check_model_gradients(&case.model, &case.x, &case.target, eps, fault)?;
            report.label = format!("{} seed {seed}", kind.name());
            reports.push(report);
        }
    }
    Ok(SuiteReport {
        reports,
        rel_tol: 1e-4,
        abs_floor: 1e-6,
    })
}
