use rand::Rng;
use serde::{Deserialize, Serialize};

use super::init::glorot_uniform;
use crate::error::{Error, Result};
use crate::numerics::{dense_forward, gemm, Activation, Matrix, Op};

/// Fully connected layer `φ(x·w + b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub(crate) w: Matrix,
    pub(crate) b: Matrix,
    pub(crate) activation: Activation,
}

impl DenseLayer {
    pub fn new(w: Matrix, b: Matrix, activation: Activation) -> Result<Self> {
        let layer = DenseLayer { w, b, activation };
        layer.validate()?;
        Ok(layer)
    }

    pub fn init<R: Rng + ?Sized>(rng: &mut R, inputs: usize, units: usize, activation: Activation) -> Self {
        DenseLayer {
            w: glorot_uniform(rng, inputs, units),
            b: Matrix::zeros(1, units),
            activation,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.b.rows() != 1 || self.b.cols() != self.w.cols() {
            return Err(Error::Shape {
                op: "DenseLayer bias",
                left: self.w.shape(),
                right: self.b.shape(),
            });
        }
        Ok(())
    }

    pub fn inputs(&self) -> usize {
        self.w.rows()
    }

    pub fn units(&self) -> usize {
        self.w.cols()
    }

    pub fn weights(&self) -> &Matrix {
        &self.w
    }

    pub fn bias(&self) -> &Matrix {
        &self.b
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        dense_forward(x, &self.w, &self.b, self.activation)
    }

    /// Backward pass given the cached input `x`, output `y` and upstream
    /// gradient `dy`. Accumulates into `dw`/`db` and returns `dL/dx` when asked.
    pub(crate) fn backward(
        &self,
        x: &Matrix,
        y: &Matrix,
        dy: &Matrix,
        dw: &mut Matrix,
        db: &mut Matrix,
        want_dx: bool,
    ) -> Option<Matrix> {
        let dz = self.activation.backward(y, dy);
        gemm(1.0, x, Op::T, &dz, Op::N, 1.0, dw);
        db.add_col_sums_of(&dz);
        want_dx.then(|| {
            let mut dx = Matrix::zeros(x.rows(), x.cols());
            gemm(1.0, &dz, Op::N, &self.w, Op::T, 0.0, &mut dx);
            dx
        })
    }
}
