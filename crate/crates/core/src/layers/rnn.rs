use rand::Rng;
use serde::{Deserialize, Serialize};

use super::init::glorot_uniform;
use crate::error::{Error, Result};
use crate::numerics::{gemm, Activation, Matrix, Op};

/// Layer of simple recurrent neurons:
/// `y_t = φ(x_t·w_x + y_{t-1}·w_y + b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimpleRnnLayer {
    pub(crate) w_x: Matrix,
    pub(crate) w_y: Matrix,
    pub(crate) b: Matrix,
    pub(crate) activation: Activation,
}

impl SimpleRnnLayer {
    pub fn new(w_x: Matrix, w_y: Matrix, b: Matrix, activation: Activation) -> Result<Self> {
        let layer = SimpleRnnLayer {
            w_x,
            w_y,
            b,
            activation,
        };
        layer.validate()?;
        Ok(layer)
    }

    pub fn init<R: Rng + ?Sized>(rng: &mut R, inputs: usize, units: usize, activation: Activation) -> Self {
        SimpleRnnLayer {
            w_x: glorot_uniform(rng, inputs, units),
            w_y: glorot_uniform(rng, units, units),
            b: Matrix::zeros(1, units),
            activation,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let units = self.w_x.cols();
        if self.w_y.shape() != (units, units) {
            return Err(Error::Shape {
                op: "SimpleRnnLayer recurrent kernel",
                left: self.w_x.shape(),
                right: self.w_y.shape(),
            });
        }
        if self.b.shape() != (1, units) {
            return Err(Error::Shape {
                op: "SimpleRnnLayer bias",
                left: self.w_x.shape(),
                right: self.b.shape(),
            });
        }
        if self.activation == Activation::Softmax {
            return Err(Error::config("softmax is not supported as a recurrent activation"));
        }
        Ok(())
    }

    pub fn inputs(&self) -> usize {
        self.w_x.rows()
    }

    pub fn units(&self) -> usize {
        self.w_x.cols()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub(crate) fn step_unchecked(&self, x_t: &Matrix, y_prev: Option<&Matrix>) -> Matrix {
        let mut z = Matrix::zeros(x_t.rows(), self.units());
        z.add_row_in_place(&self.b);
        gemm(1.0, x_t, Op::N, &self.w_x, Op::N, 1.0, &mut z);
        if let Some(y_prev) = y_prev {
            gemm(1.0, y_prev, Op::N, &self.w_y, Op::N, 1.0, &mut z);
        }
        self.activation.apply_in_place(&mut z);
        z
    }

    /// One recurrence step for a whole batch.
    pub fn step(&self, x_t: &Matrix, y_prev: &Matrix) -> Result<Matrix> {
        if x_t.cols() != self.inputs() {
            return Err(Error::Shape {
                op: "rnn_step input",
                left: x_t.shape(),
                right: self.w_x.shape(),
            });
        }
        if y_prev.shape() != (x_t.rows(), self.units()) {
            return Err(Error::Shape {
                op: "rnn_step state",
                left: y_prev.shape(),
                right: (x_t.rows(), self.units()),
            });
        }
        self.step_unchecked(x_t, Some(y_prev)).ensure_finite("rnn_step")
    }

    /// Backpropagation through time over cached inputs `xs` and outputs `ys`.
    ///
    /// `dys[t]` is the loss gradient arriving at `y_t` from the layer above.
    /// Gradients accumulate into `grads = [dw_x, dw_y, db]`.
    pub(crate) fn backward(
        &self,
        xs: &[Matrix],
        ys: &[Matrix],
        dys: &[Option<Matrix>],
        grads: &mut [Matrix],
        want_dx: bool,
    ) -> Vec<Matrix> {
        let steps = xs.len();
        let batch = xs[0].rows();
        let units = self.units();
        let mut dx = Vec::new();
        if want_dx {
            dx = vec![Matrix::zeros(batch, self.inputs()); steps];
        }
        let mut carry: Option<Matrix> = None;
        let [dwx, dwy, db] = grads else {
            unreachable!("simple RNN has three parameter groups")
        };
        for t in (0..steps).rev() {
            let dy = match (&dys[t], carry.take()) {
                (Some(a), Some(mut b)) => {
                    b.add_in_place(a);
                    b
                }
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b,
                (None, None) => Matrix::zeros(batch, units),
            };
            let dz = self.activation.backward(&ys[t], &dy);
            gemm(1.0, &xs[t], Op::T, &dz, Op::N, 1.0, dwx);
            db.add_col_sums_of(&dz);
            if t > 0 {
                gemm(1.0, &ys[t - 1], Op::T, &dz, Op::N, 1.0, dwy);
                let mut next = Matrix::zeros(batch, units);
                gemm(1.0, &dz, Op::N, &self.w_y, Op::T, 0.0, &mut next);
                carry = Some(next);
            }
            if want_dx {
                gemm(1.0, &dz, Op::N, &self.w_x, Op::T, 0.0, &mut dx[t]);
            }
        }
        dx
    }
}
