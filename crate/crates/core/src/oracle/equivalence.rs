use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{scalar_lstm_oracle, ScalarActivation, ScalarLstmWeights};
use crate::error::Result;
use crate::layers::{lstm_step, GateParams, LstmCellState, LstmLayer};
use crate::numerics::{Activation, Matrix};

/// Worst disagreement between the matrix LSTM and the scalar reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub configs: usize,
    pub steps: usize,
    pub max_abs_diff: f64,
}

fn scalar(v: f64) -> Matrix {
    Matrix::filled(1, 1, v).expect("finite")
}

/// Builds the one-unit matrix layer holding the same weights.
pub fn matrix_lstm_from_scalar(w: &ScalarLstmWeights) -> Result<LstmLayer> {
    let gate = |k: usize| GateParams {
        w_x: scalar(w.w_x[k]),
        w_h: scalar(w.w_h[k]),
        b: scalar(w.b[k]),
    };
    let act = match w.cell_activation {
        ScalarActivation::Tanh => Activation::Tanh,
        ScalarActivation::Relu => Activation::ReLU,
        ScalarActivation::Linear => Activation::Linear,
        ScalarActivation::Sigmoid => Activation::Sigmoid,
    };
    LstmLayer::from_gates(gate(0), gate(1), gate(2), gate(3), act)
}

/// Runs `configs` random one-unit LSTMs over 1–4 step sequences through both
/// `lstm_step` and the scalar oracle.
pub fn lstm_equivalence(configs: usize, seed: u64) -> Result<EquivalenceReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = EquivalenceReport {
        configs,
        steps: 0,
        max_abs_diff: 0.0,
    };
    let acts = [ScalarActivation::Tanh, ScalarActivation::Relu, ScalarActivation::Linear];
    for _ in 0..configs {
        let mut draw = || [0; 4].map(|_| rng.random_range(-1.5..1.5));
        let (w_x, w_h, b) = (draw(), draw(), draw());
        let w = ScalarLstmWeights {
            w_x,
            w_h,
            b,
            cell_activation: acts[rng.random_range(0..acts.len())],
        };
        let inputs: Vec<f64> = (0..rng.random_range(1..=4)).map(|_| rng.random_range(-2.0..2.0)).collect();
        let expect = scalar_lstm_oracle(&w, &inputs);
        let layer = matrix_lstm_from_scalar(&w)?;
        let mut state = LstmCellState::zeros(1, 1);
        for (&x, &e) in inputs.iter().zip(&expect) {
            let (h, next) = lstm_step(&layer, &scalar(x), &state)?;
            report.max_abs_diff = report.max_abs_diff.max((h.get(0, 0) - e).abs());
            report.steps += 1;
            state = next;
        }
    }
    Ok(report)
}
