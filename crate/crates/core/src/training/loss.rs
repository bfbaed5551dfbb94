use super::config::L2Coefficients;
use crate::error::{Error, Result};
use crate::layers::{Gradients, ParamId, ParamKind, SequentialModel};
use crate::numerics::Matrix;

/// Mean of `(pred − target)²` over every entry.
pub fn mse(pred: &Matrix, target: &Matrix) -> Result<f64> {
    if pred.shape() != target.shape() {
        return Err(Error::Shape {
            op: "mse",
            left: pred.shape(),
            right: target.shape(),
        });
    }
    if pred.is_empty() {
        return Err(Error::Data("mse of an empty matrix".into()));
    }
    let sse: f64 = pred.as_slice().iter().zip(target.as_slice()).map(|(p, t)| (p - t).powi(2)).sum();
    Ok(sse / pred.len() as f64)
}

fn coefficient(l2: &L2Coefficients, kind: ParamKind) -> f64 {
    match kind {
        ParamKind::Kernel => l2.kernel,
        ParamKind::Recurrent => l2.recurrent,
        ParamKind::Bias => l2.bias,
    }
}

/// `Σ_group λ_group · Σ w²` over the first LSTM layer only.
pub fn l2_penalty(model: &SequentialModel, l2: &L2Coefficients) -> f64 {
    let Some(layer) = model.first_lstm() else {
        return 0.0;
    };
    model
        .parameters()
        .into_iter()
        .filter(|(id, _)| id.layer == layer)
        .map(|(id, m)| coefficient(l2, id.kind) * m.sum_squares())
        .sum()
}

/// Adds `2λw` to the gradients of the first LSTM layer.
pub fn add_l2_gradient(model: &SequentialModel, l2: &L2Coefficients, grads: &mut Gradients) {
    let Some(layer) = model.first_lstm() else {
        return;
    };
    for (id, w) in model.parameters() {
        let lambda = coefficient(l2, id.kind);
        if id.layer != layer || lambda == 0.0 {
            continue;
        }
        if let Some(g) = grads.get_mut(ParamId { layer, kind: id.kind }) {
            for (gv, wv) in g.as_mut_slice().iter_mut().zip(w.as_slice()) {
                *gv += 2.0 * lambda * wv;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::{Layer, LstmLayer};
    use crate::numerics::Activation;
    use crate::training::config::forecaster_architecture;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn mse_examples() {
        let a = m(&[&[1.0, -2.0], &[0.5, 4.0]]);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let shifted = Matrix::from_vec(2, 2, a.as_slice().iter().map(|v| v + 2.0).collect()).unwrap();
        assert_eq!(mse(&shifted, &a).unwrap(), 4.0);
        assert_eq!(mse(&m(&[&[1.0, 2.0]]), &m(&[&[0.0, 0.0]])).unwrap(), 2.5);
        assert!(mse(&m(&[&[1.0]]), &m(&[&[1.0, 2.0]])).is_err());
    }

    fn single_weight_model(kernel: f64) -> SequentialModel {
        let mut k = Matrix::zeros(1, 4);
        k.set(0, 0, kernel);
        let layer = LstmLayer::new(k, Matrix::zeros(1, 4), Matrix::zeros(1, 4), Activation::Tanh).unwrap();
        SequentialModel::new(vec![Layer::Lstm {
            layer,
            return_sequences: false,
        }])
        .unwrap()
    }

    #[test]
    fn penalty_examples() {
        assert_eq!(l2_penalty(&single_weight_model(0.0), &L2Coefficients::uniform(0.005)), 0.0);
        assert_eq!(l2_penalty(&single_weight_model(3.0), &L2Coefficients::default()), 0.0);
        let p = l2_penalty(&single_weight_model(3.0), &L2Coefficients::uniform(0.005));
        assert!((p - 0.045).abs() < 1e-15, "{p}");
    }

    #[test]
    fn only_the_first_lstm_is_penalized() {
        let model = SequentialModel::build(3, &forecaster_architecture(4), 1).unwrap();
        let l2 = L2Coefficients::uniform(0.1);
        let expect: f64 = model.parameters().iter().filter(|(id, _)| id.layer == 0).map(|(_, w)| 0.1 * w.sum_squares()).sum();
        // Forget-gate biases start at 1, so the bias group contributes too.
        assert!((l2_penalty(&model, &l2) - expect).abs() < 1e-12);
        let mut g = Gradients::zeros_like(&model);
        add_l2_gradient(&model, &l2, &mut g);
        for (id, grad) in g.iter() {
            if id.layer == 0 {
                let w = model.parameters().into_iter().find(|(i, _)| *i == id).unwrap().1;
                for (a, b) in grad.as_slice().iter().zip(w.as_slice()) {
                    assert_eq!(*a, 0.2 * b);
                }
            } else {
                assert!(grad.as_slice().iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn penalty_gradient_matches_finite_differences() {
        let model = SequentialModel::build(2, &forecaster_architecture(3), 4).unwrap();
        let l2 = L2Coefficients {
            kernel: 0.3,
            recurrent: 0.05,
            bias: 0.7,
        };
        let mut g = Gradients::zeros_like(&model);
        add_l2_gradient(&model, &l2, &mut g);
        let mut probe = model.clone();
        let numeric = crate::oracle::finite_diff_gradient(
            |p| {
                probe.set_flat_parameters(p).unwrap();
                l2_penalty(&probe, &l2)
            },
            &model.flat_parameters(),
            1e-5,
        )
        .unwrap();
        for (a, b) in g.flatten().iter().zip(&numeric) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}
