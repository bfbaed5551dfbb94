//! Dense linear algebra and activation functions shared by every layer.

mod activation;
mod matrix;

pub use activation::{sigmoid, Activation};
pub use matrix::Matrix;
pub(crate) use matrix::{gemm, Op};

use crate::error::{Error, Result};

/// One fully connected layer evaluation, `φ(x·w + b)`.
///
/// `b` is a 1×`w.cols()` row broadcast over the batch rows of `x`.
pub fn dense_forward(x: &Matrix, w: &Matrix, b: &Matrix, activation: Activation) -> Result<Matrix> {
    if b.rows() != 1 || b.cols() != w.cols() {
        return Err(Error::Shape {
            op: "dense_forward bias",
            left: w.shape(),
            right: b.shape(),
        });
    }
    let mut z = x.matmul(w)?;
    z.add_row_in_place(b);
    activation.apply_in_place(&mut z);
    z.ensure_finite("dense_forward")
}

pub fn apply_activation(m: &Matrix, activation: Activation) -> Matrix {
    activation.apply(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_vec(r, c, (0..r * c).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
    }

    #[test]
    fn identity_network() {
        let x = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        let out = dense_forward(&x, &Matrix::identity(2), &Matrix::zeros(1, 2), Activation::Linear).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn linear_dense_equals_matmul_plus_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random(&mut rng, 3, 4);
        let w = random(&mut rng, 4, 4);
        let b = random(&mut rng, 1, 4);
        let got = dense_forward(&x, &w, &b, Activation::Linear).unwrap();
        // Separate path: explicit product then per-element bias.
        for i in 0..3 {
            for j in 0..4 {
                let mut s = 0.0;
                for k in 0..4 {
                    s += x.get(i, k) * w.get(k, j);
                }
                assert!((got.get(i, j) - (s + b.get(0, j))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bias_shape_checked() {
        let x = Matrix::zeros(1, 2);
        assert!(dense_forward(&x, &Matrix::identity(2), &Matrix::zeros(1, 3), Activation::Linear).is_err());
        assert!(dense_forward(&Matrix::zeros(1, 3), &Matrix::identity(2), &Matrix::zeros(1, 2), Activation::Linear).is_err());
    }
}
