use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// First and second moment estimates for a flat parameter vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Shape {
            op: "adam_step",
            left: (params.len(), 1),
            right: (grads.len(), state.m.len()),
        });
    }
    state.t += 1;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = vec![0.3, -1.2];
        let mut s = AdamState::new(2);
        adam_step(&mut p, &[0.0, 0.0], &mut s, 0.001).unwrap();
        assert_eq!(p, vec![0.3, -1.2]);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn first_step_has_unit_magnitude() {
        // m̂ = 1, v̂ = 1 after bias correction, so Δp = −lr / (1 + ε).
        let mut p = vec![0.0];
        let mut s = AdamState::new(1);
        adam_step(&mut p, &[1.0], &mut s, 0.001).unwrap();
        assert!((p[0] + 0.001 / (1.0 + 1e-8)).abs() < 1e-18, "{}", p[0]);
        assert!((p[0] + 0.000999999).abs() < 1e-9);
    }

    #[test]
    fn repeated_gradient_moves_monotonically() {
        let mut p = vec![1.0];
        let mut s = AdamState::new(1);
        adam_step(&mut p, &[0.5], &mut s, 0.01).unwrap();
        let after_one = p[0];
        adam_step(&mut p, &[0.5], &mut s, 0.01).unwrap();
        assert!(after_one < 1.0 && p[0] < after_one);
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let mut s = AdamState::new(2);
        assert!(adam_step(&mut [0.0, 0.0], &[1.0], &mut s, 0.1).is_err());
    }

    proptest! {
        #[test]
        fn zero_learning_rate_is_identity(ps in prop::collection::vec(-10.0f64..10.0, 1..8), seed in 0u64..1000) {
            let gs: Vec<f64> = ps.iter().enumerate().map(|(i, v)| (v * 1.7 + i as f64 + seed as f64).sin()).collect();
            let mut p = ps.clone();
            let mut s = AdamState::new(p.len());
            for _ in 0..3 {
                adam_step(&mut p, &gs, &mut s, 0.0).unwrap();
            }
            prop_assert_eq!(p, ps);
        }
    }
}
