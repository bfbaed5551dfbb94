use rand::Rng;

use crate::numerics::Matrix;

/// Glorot (Xavier) uniform initialization: `U(-l, l)` with
/// `l = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng + ?Sized>(rng: &mut R, fan_in: usize, fan_out: usize) -> Matrix {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| rng.random_range(-limit..=limit))
        .collect();
    Matrix::from_raw(fan_in, fan_out, data)
}
