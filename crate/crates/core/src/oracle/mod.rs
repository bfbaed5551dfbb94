//! Independent correctness references.
//!
//! The scalar evaluators share no code with the matrix layers: they use plain
//! `f64` arithmetic and their own activation functions, and the
//! finite-difference gradient only ever calls a loss closure. The drivers
//! that compare the two sides live here too.

mod equivalence;
mod gradcheck;

pub use equivalence::{lstm_equivalence, matrix_lstm_from_scalar, EquivalenceReport};

pub use gradcheck::{
    check_model_gradients, random_check_case, run_gradient_suite, CheckCase, CheckKind, Fault, GradCheckReport,
    ParamCheck, SuiteReport,
};

use crate::error::{Error, Result};

/// Central-difference gradient `(L(p+ε) − L(p−ε)) / 2ε`, one coordinate at a time.
pub fn finite_diff_gradient<F>(mut loss: F, params: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::config(format!("finite-difference step must be positive, got {eps}")));
    }
    let mut p = params.to_vec();
    let mut grad = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + eps;
        let plus = loss(&p);
        p[i] = orig - eps;
        let minus = loss(&p);
        p[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!("loss at coordinate {i}")));
        }
        grad.push((plus - minus) / (2.0 * eps));
    }
    Ok(grad)
}

/// `|a − b| / max(|a|, |b|, 1e-8)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Elementwise nonlinearity for the scalar references.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarActivation {
    Tanh,
    Relu,
    Linear,
    Sigmoid,
}

impl ScalarActivation {
    fn eval(self, z: f64) -> f64 {
        match self {
            ScalarActivation::Tanh => {
                let (a, b) = (z.exp(), (-z).exp());
                if z.abs() > 20.0 {
                    z.signum()
                } else {
                    (a - b) / (a + b)
                }
            }
            ScalarActivation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            ScalarActivation::Linear => z,
            ScalarActivation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Weights of a one-unit, one-feature LSTM. Arrays are indexed
/// `[input, forget, main, output]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarLstmWeights {
    pub w_x: [f64; 4],
    pub w_h: [f64; 4],
    pub b: [f64; 4],
    pub cell_activation: ScalarActivation,
}

/// Runs a one-unit LSTM over `inputs` from zero state, returning `h_t` for
/// every step.
pub fn scalar_lstm_oracle(w: &ScalarLstmWeights, inputs: &[f64]) -> Vec<f64> {
    scalar_lstm_trace(w, inputs).into_iter().map(|s| s.h).collect()
}

/// Full per-step trace of the scalar LSTM.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarLstmStep {
    pub i: f64,
    pub f: f64,
    pub g: f64,
    pub o: f64,
    pub c: f64,
    pub h: f64,
}

pub fn scalar_lstm_trace(w: &ScalarLstmWeights, inputs: &[f64]) -> Vec<ScalarLstmStep> {
    let mut h = 0.0;
    let mut c = 0.0;
    let mut out = Vec::with_capacity(inputs.len());
    for &x in inputs {
        let pre = |k: usize| w.w_x[k] * x + w.w_h[k] * h + w.b[k];
        let i = logistic(pre(0));
        let f = logistic(pre(1));
        let g = w.cell_activation.eval(pre(2));
        let o = logistic(pre(3));
        c = f * c + i * g;
        h = o * w.cell_activation.eval(c);
        out.push(ScalarLstmStep { i, f, g, o, c, h });
    }
    out
}

/// Runs a one-unit simple recurrent neuron over `inputs` from zero state.
pub fn scalar_rnn_oracle(w_x: f64, w_y: f64, b: f64, activation: ScalarActivation, inputs: &[f64]) -> Vec<f64> {
    let mut y = 0.0;
    inputs
        .iter()
        .map(|&x| {
            y = activation.eval(w_x * x + w_y * y + b);
            y
        })
        .collect()
}
