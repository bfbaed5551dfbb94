use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// Heaviside threshold: 0 for negative input, 1 otherwise (so `step(0) = 1`).
    Step,
    Sigmoid,
    Tanh,
    #[serde(rename = "relu")]
    ReLU,
    /// Row-wise softmax.
    Softmax,
    Linear,
}

/// Logistic function in the branch-on-sign form that never evaluates `exp` of
/// a large positive argument.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    /// Applies an elementwise activation to one value. Softmax has no scalar
    /// form and is treated as the identity here.
    pub fn scalar(self, z: f64) -> f64 {
        match self {
            Activation::Step => {
                if z < 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
            Activation::Sigmoid => sigmoid(z),
            Activation::Tanh => z.tanh(),
            Activation::ReLU => z.max(0.0),
            Activation::Linear | Activation::Softmax => z,
        }
    }

    /// Derivative expressed through the activation's output `y = φ(z)`.
    ///
    /// Every elementwise kind used here has a derivative recoverable from its
    /// output, so the backward pass never needs pre-activations.
    pub fn scalar_derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Step => 0.0,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
            Activation::ReLU => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear | Activation::Softmax => 1.0,
        }
    }

    pub fn apply(self, m: &Matrix) -> Matrix {
        let mut out = m.clone();
        self.apply_in_place(&mut out);
        out
    }

    pub(crate) fn apply_in_place(self, m: &mut Matrix) {
        match self {
            Activation::Linear => {}
            Activation::Softmax => {
                let cols = m.cols();
                for row in m.as_mut_slice().chunks_mut(cols.max(1)) {
                    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let mut sum = 0.0;
                    for v in row.iter_mut() {
                        *v = (*v - max).exp();
                        sum += *v;
                    }
                    for v in row.iter_mut() {
                        *v /= sum;
                    }
                }
            }
            kind => {
                for v in m.as_mut_slice() {
                    *v = kind.scalar(*v);
                }
            }
        }
    }

    /// Gradient with respect to the pre-activation, given the output `y` and
    /// the gradient `dy` flowing into it.
    pub fn backward(self, y: &Matrix, dy: &Matrix) -> Matrix {
        debug_assert_eq!(y.shape(), dy.shape());
        match self {
            Activation::Linear => dy.clone(),
            Activation::Softmax => {
                let cols = y.cols();
                let mut out = Vec::with_capacity(y.len());
                for r in 0..y.rows() {
                    let (yr, dr) = (y.row(r), dy.row(r));
                    let dot: f64 = yr.iter().zip(dr).map(|(a, b)| a * b).sum();
                    out.extend(yr.iter().zip(dr).map(|(a, b)| a * (b - dot)));
                }
                Matrix::from_raw(y.rows(), cols, out)
            }
            kind => y.zip_map(dy, |yv, g| kind.scalar_derivative_from_output(yv) * g),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Activation::Step => "step",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::ReLU => "relu",
            Activation::Softmax => "softmax",
            Activation::Linear => "linear",
        };
        f.write_str(s)
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "step" | "heaviside" => Activation::Step,
            "sigmoid" | "logistic" => Activation::Sigmoid,
            "tanh" => Activation::Tanh,
            "relu" => Activation::ReLU,
            "softmax" => Activation::Softmax,
            "linear" | "identity" | "none" => Activation::Linear,
            other => return Err(Error::config(format!("unknown activation `{other}`"))),
        })
    }
}
