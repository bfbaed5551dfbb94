use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::numerics::dense_forward;
use crate::oracle::{
    random_check_case, run_gradient_suite, scalar_lstm_oracle, scalar_rnn_oracle, CheckKind, ScalarActivation,
    ScalarLstmWeights,
};

fn m(rows: &[&[f64]]) -> Matrix {
    Matrix::from_rows(rows).unwrap()
}

fn gate(w_x: f64, w_h: f64, b: f64) -> GateParams {
    GateParams {
        w_x: m(&[&[w_x]]),
        w_h: m(&[&[w_h]]),
        b: m(&[&[b]]),
    }
}

fn scalar_lstm_layer(w: &ScalarLstmWeights) -> LstmLayer {
    let act = match w.cell_activation {
        ScalarActivation::Tanh => Activation::Tanh,
        ScalarActivation::Relu => Activation::ReLU,
        ScalarActivation::Linear => Activation::Linear,
        ScalarActivation::Sigmoid => Activation::Sigmoid,
    };
    LstmLayer::from_gates(
        gate(w.w_x[0], w.w_h[0], w.b[0]),
        gate(w.w_x[1], w.w_h[1], w.b[1]),
        gate(w.w_x[2], w.w_h[2], w.b[2]),
        gate(w.w_x[3], w.w_h[3], w.b[3]),
        act,
    )
    .unwrap()
}

fn random_scalar_weights(rng: &mut ChaCha8Rng) -> ScalarLstmWeights {
    let mut draw = || [0; 4].map(|_| rng.random_range(-1.5..1.5));
    let (w_x, w_h, b) = (draw(), draw(), draw());
    let cell_activation = [ScalarActivation::Tanh, ScalarActivation::Relu, ScalarActivation::Linear][rng.random_range(0..3)];
    ScalarLstmWeights {
        w_x,
        w_h,
        b,
        cell_activation,
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_vec(r, c, (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

#[test]
fn xor_mlp_with_threshold_units() {
    // Hidden TLUs: AND-like (bias -1.5) and OR-like (bias -0.5), both with
    // unit input weights. Output: -1 from the AND unit, +1 from the OR unit,
    // bias -0.5. Unlabeled connections carry weight 1.
    let hidden = DenseLayer::new(m(&[&[1.0, 1.0], &[1.0, 1.0]]), m(&[&[-1.5, -0.5]]), Activation::Step).unwrap();
    let output = DenseLayer::new(m(&[&[-1.0], &[1.0]]), m(&[&[-0.5]]), Activation::Step).unwrap();
    let model = SequentialModel::new(vec![Layer::Dense(hidden), Layer::Dense(output)]).unwrap();
    for (a, b, expect) in [(0.0, 0.0, 0.0), (1.0, 1.0, 0.0), (1.0, 0.0, 1.0), (0.0, 1.0, 1.0)] {
        let x = SequenceBatch::single(&m(&[&[a, b]]));
        assert_eq!(model.forward(&x).unwrap().as_slice(), &[expect], "input ({a}, {b})");
    }
}

#[test]
fn rnn_step_examples() {
    let zero = SimpleRnnLayer::new(Matrix::zeros(3, 2), Matrix::zeros(2, 2), Matrix::zeros(1, 2), Activation::Tanh).unwrap();
    let out = rnn_step(&zero, &m(&[&[1.0, -2.0, 3.0]]), &m(&[&[0.4, -0.9]])).unwrap();
    assert_eq!(out, Matrix::zeros(1, 2));

    let unit = SimpleRnnLayer::new(m(&[&[1.0]]), m(&[&[1.0]]), m(&[&[0.0]]), Activation::Linear).unwrap();
    assert_eq!(rnn_step(&unit, &m(&[&[2.0]]), &m(&[&[3.0]])).unwrap().as_slice(), &[5.0]);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let layer = SimpleRnnLayer::init(&mut rng, 3, 4, Activation::Tanh);
    let x = random_matrix(&mut rng, 2, 3);
    let via_rnn = rnn_step(&layer, &x, &Matrix::zeros(2, 4)).unwrap();
    let via_dense = dense_forward(&x, &layer.w_x, &layer.b, Activation::Tanh).unwrap();
    assert_eq!(via_rnn, via_dense);
}

#[test]
fn rnn_step_rejects_bad_shapes() {
    let layer = SimpleRnnLayer::new(Matrix::zeros(3, 2), Matrix::zeros(2, 2), Matrix::zeros(1, 2), Activation::Tanh).unwrap();
    assert!(rnn_step(&layer, &Matrix::zeros(1, 2), &Matrix::zeros(1, 2)).is_err());
    assert!(rnn_step(&layer, &Matrix::zeros(1, 3), &Matrix::zeros(2, 2)).is_err());
    assert!(SimpleRnnLayer::new(Matrix::zeros(3, 2), Matrix::zeros(2, 3), Matrix::zeros(1, 2), Activation::Tanh).is_err());
}

#[test]
fn lstm_zero_weights_give_zero_output() {
    let layer = LstmLayer::new(Matrix::zeros(2, 12), Matrix::zeros(3, 12), Matrix::zeros(1, 12), Activation::Tanh).unwrap();
    let (out, state) = lstm_step(&layer, &m(&[&[0.7, -1.1]]), &LstmCellState::zeros(1, 3)).unwrap();
    assert_eq!(out, Matrix::zeros(1, 3));
    assert_eq!(state.c, Matrix::zeros(1, 3));
}

#[test]
fn closed_forget_gate_drops_memory() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut layer = LstmLayer::init(&mut rng, 2, 3, Activation::Tanh);
    for j in 0..3 {
        layer.bias.set(0, 3 + j, -1e3);
    }
    let x = random_matrix(&mut rng, 2, 2);
    let state = LstmCellState::new(random_matrix(&mut rng, 2, 3), random_matrix(&mut rng, 2, 3).scale(5.0).unwrap()).unwrap();
    let (_, next) = lstm_step(&layer, &x, &state).unwrap();
    let fresh = layer.step_unchecked(&x, Some((&state.h, &state.c)));
    for r in 0..2 {
        for j in 0..3 {
            let i = fresh.gates.get(r, j);
            let g = fresh.gates.get(r, 6 + j);
            assert!((next.c.get(r, j) - i * g).abs() < 1e-6);
        }
    }
}

#[test]
fn open_forget_gate_keeps_memory() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut layer = LstmLayer::init(&mut rng, 2, 3, Activation::Tanh);
    for j in 0..3 {
        layer.bias.set(0, j, -1e3); // input gate closed
        layer.bias.set(0, 3 + j, 1e3); // forget gate open
    }
    let x = random_matrix(&mut rng, 1, 2);
    let state = LstmCellState::new(random_matrix(&mut rng, 1, 3), random_matrix(&mut rng, 1, 3)).unwrap();
    let (_, next) = lstm_step(&layer, &x, &state).unwrap();
    for (a, b) in next.c.as_slice().iter().zip(state.c.as_slice()) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn lstm_matches_scalar_oracle_single_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let w = random_scalar_weights(&mut rng);
        let x: f64 = rng.random_range(-2.0..2.0);
        let layer = scalar_lstm_layer(&w);
        let (out, _) = lstm_step(&layer, &m(&[&[x]]), &LstmCellState::zeros(1, 1)).unwrap();
        let expect = scalar_lstm_oracle(&w, &[x])[0];
        assert!((out.get(0, 0) - expect).abs() <= 1e-12, "{out:?} vs {expect}");
    }
}

#[test]
fn two_step_lstm_chain_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let w = random_scalar_weights(&mut rng);
        let inputs = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let model = SequentialModel::new(vec![Layer::Lstm {
            layer: scalar_lstm_layer(&w),
            return_sequences: false,
        }])
        .unwrap();
        let x = SequenceBatch::new(1, 2, 1, inputs.to_vec()).unwrap();
        let out = forward_sequence(&model, &x).unwrap();
        let expect = scalar_lstm_oracle(&w, &inputs)[1];
        assert!((out.get(0, 0) - expect).abs() <= 1e-12);
    }
}

#[test]
fn simple_rnn_sequence_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    for _ in 0..20 {
        let (wx, wy, b) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let inputs: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let layer = SimpleRnnLayer::new(m(&[&[wx]]), m(&[&[wy]]), m(&[&[b]]), Activation::Tanh).unwrap();
        let model = SequentialModel::new(vec![Layer::SimpleRnn {
            layer,
            return_sequences: false,
        }])
        .unwrap();
        let out = model.forward(&SequenceBatch::new(1, 3, 1, inputs.clone()).unwrap()).unwrap();
        let expect = scalar_rnn_oracle(wx, wy, b, ScalarActivation::Tanh, &inputs)[2];
        assert!((out.get(0, 0) - expect).abs() <= 1e-12);
    }
}

#[test]
fn dense_only_model_uses_last_timestep() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let dense = DenseLayer::init(&mut rng, 3, 2, Activation::Tanh);
    let model = SequentialModel::new(vec![Layer::Dense(dense.clone())]).unwrap();
    let x = SequenceBatch::new(2, 4, 3, (0..24).map(|v| v as f64 / 10.0).collect()).unwrap();
    let expect = dense_forward(&x.timestep(3), &dense.w, &dense.b, Activation::Tanh).unwrap();
    assert_eq!(model.forward(&x).unwrap(), expect);
}

#[test]
fn single_step_stack_is_manual_composition() {
    let specs = [
        LayerSpec::Lstm {
            units: 4,
            activation: Activation::Tanh,
            return_sequences: true,
        },
        LayerSpec::Lstm {
            units: 3,
            activation: Activation::ReLU,
            return_sequences: false,
        },
        LayerSpec::Dense {
            units: 2,
            activation: Activation::Linear,
        },
    ];
    let model = SequentialModel::build(2, &specs, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);

    // time = 1
    let x1 = random_matrix(&mut rng, 2, 2);
    let got = model.forward(&SequenceBatch::from_sequences(&[x1.row(0).to_vec(), x1.row(1).to_vec()].map(|r| Matrix::row_vector(&r).unwrap())).unwrap()).unwrap();
    let (Layer::Lstm { layer: l1, .. }, Layer::Lstm { layer: l2, .. }, Layer::Dense(d)) =
        (&model.layers()[0], &model.layers()[1], &model.layers()[2])
    else {
        panic!("unexpected layout")
    };
    let (h1, _) = l1.step(&x1, &LstmCellState::zeros(2, 4)).unwrap();
    let (h2, _) = l2.step(&h1, &LstmCellState::zeros(2, 3)).unwrap();
    assert_eq!(got, d.forward(&h2).unwrap());

    // time = 3, unrolled by hand
    let x = SequenceBatch::new(2, 3, 2, (0..12).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let mut s1 = LstmCellState::zeros(2, 4);
    let mut s2 = LstmCellState::zeros(2, 3);
    for t in 0..3 {
        let (h, n1) = l1.step(&x.timestep(t), &s1).unwrap();
        s1 = n1;
        let (_, n2) = l2.step(&h, &s2).unwrap();
        s2 = n2;
    }
    assert_eq!(model.forward(&x).unwrap(), d.forward(&s2.h).unwrap());
}

#[test]
fn forward_is_bit_deterministic() {
    let case = random_check_case(CheckKind::Lstm, 3).unwrap();
    let a = case.model.forward(&case.x).unwrap();
    let b = case.model.clone().forward(&case.x).unwrap();
    assert_eq!(a.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    let (c, _) = case.model.forward_train(&case.x).unwrap();
    assert_eq!(a, c);
}

#[test]
fn forward_rejects_empty_and_mismatched_input() {
    let model = SequentialModel::build(
        2,
        &[LayerSpec::Lstm {
            units: 2,
            activation: Activation::Tanh,
            return_sequences: false,
        }],
        0,
    )
    .unwrap();
    assert!(model.forward(&SequenceBatch::new(1, 0, 2, vec![]).unwrap()).is_err());
    assert!(model.forward(&SequenceBatch::new(1, 2, 3, vec![0.0; 6]).unwrap()).is_err());
}

#[test]
fn model_validation_lists_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let err = SequentialModel::new(vec![
        Layer::Lstm {
            layer: LstmLayer::init(&mut rng, 2, 3, Activation::Tanh),
            return_sequences: false,
        },
        Layer::Lstm {
            layer: LstmLayer::init(&mut rng, 4, 2, Activation::Tanh),
            return_sequences: false,
        },
    ])
    .unwrap_err();
    let Error::Config(problems) = err else { panic!("expected config error") };
    assert_eq!(problems.len(), 2, "{problems:?}");

    let err = SequentialModel::new(vec![
        Layer::Dense(DenseLayer::init(&mut rng, 2, 2, Activation::Linear)),
        Layer::SimpleRnn {
            layer: SimpleRnnLayer::init(&mut rng, 2, 2, Activation::Tanh),
            return_sequences: false,
        },
    ]);
    assert!(err.is_err());
}

#[test]
fn zero_upstream_gradient_gives_zero_gradients() {
    let case = random_check_case(CheckKind::Lstm, 8).unwrap();
    let (out, cache) = case.model.forward_train(&case.x).unwrap();
    let grads = backward_sequence(&case.model, &cache, &Matrix::zeros(out.rows(), out.cols())).unwrap();
    assert_eq!(grads.len(), case.model.parameters().len());
    assert!(grads.iter().all(|(_, g)| g.max_abs() == 0.0));
}

#[test]
fn backward_rejects_foreign_cache() {
    let a = random_check_case(CheckKind::Lstm, 1).unwrap();
    let b = random_check_case(CheckKind::Dense, 1).unwrap();
    let (out, cache) = b.model.forward_train(&b.x).unwrap();
    assert!(a.model.backward(&cache, &out).is_err());
}

#[test]
fn dense_gradient_is_x_transpose_delta() {
    // Linear 2×2 layer, batch of 2. With loss ½Σ(y − t)², δ = y − t and
    // dW = xᵀ·δ, db = column sums of δ.
    //   x = [[1, 2], [3, 4]], W = [[0.5, -1], [0.25, 0]], b = [0.1, 0.2]
    //   y = x·W + b = [[1.1, -0.8], [2.6, -2.8]]
    //   t = [[1, 0], [2, -3]] ⇒ δ = [[0.1, -0.8], [0.6, 0.2]]
    //   dW = [[1·0.1 + 3·0.6, 1·(-0.8) + 3·0.2], [2·0.1 + 4·0.6, 2·(-0.8) + 4·0.2]]
    //      = [[1.9, -0.2], [2.6, -0.8]]
    //   db = [0.7, -0.6]
    let layer = DenseLayer::new(m(&[&[0.5, -1.0], &[0.25, 0.0]]), m(&[&[0.1, 0.2]]), Activation::Linear).unwrap();
    let model = SequentialModel::new(vec![Layer::Dense(layer)]).unwrap();
    let x = SequenceBatch::new(2, 1, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let (y, cache) = model.forward_train(&x).unwrap();
    let t = m(&[&[1.0, 0.0], &[2.0, -3.0]]);
    let grads = model.backward(&cache, &y.sub(&t).unwrap()).unwrap();
    let dw = grads.get(ParamId { layer: 0, kind: ParamKind::Kernel }).unwrap();
    let db = grads.get(ParamId { layer: 0, kind: ParamKind::Bias }).unwrap();
    for (a, b) in dw.as_slice().iter().zip([1.9, -0.2, 2.6, -0.8]) {
        assert!((a - b).abs() < 1e-12, "{dw:?}");
    }
    for (a, b) in db.as_slice().iter().zip([0.7, -0.6]) {
        assert!((a - b).abs() < 1e-12, "{db:?}");
    }
}

#[test]
fn all_layer_gradients_match_finite_differences() {
    let suite = run_gradient_suite(20, 1e-5, None).unwrap();
    let failures = suite.failures();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn checkpoint_json_round_trip_is_lossless() {
    let case = random_check_case(CheckKind::Lstm, 12).unwrap();
    let json = serde_json::to_string(&case.model).unwrap();
    let back: SequentialModel = serde_json::from_str(&json).unwrap();
    assert_eq!(back, case.model);
    let rnn = random_check_case(CheckKind::SimpleRnn, 12).unwrap();
    let back: SequentialModel = serde_json::from_str(&serde_json::to_string(&rnn.model).unwrap()).unwrap();
    assert_eq!(back, rnn.model);
}

#[test]
fn corrupted_checkpoint_is_rejected() {
    let case = random_check_case(CheckKind::Lstm, 12).unwrap();
    let mut value = serde_json::to_value(&case.model).unwrap();
    value["layers"][0]["recurrent"]["rows"] = serde_json::json!(99);
    assert!(serde_json::from_value::<SequentialModel>(value).is_err());
}

#[test]
fn gate_views_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let layer = LstmLayer::init(&mut rng, 3, 2, Activation::Tanh);
    let [i, f, g, o] = Gate::ALL.map(|gate| layer.gate(gate));
    assert_eq!(f.b.as_slice(), &[1.0, 1.0]);
    let rebuilt = LstmLayer::from_gates(i, f, g, o, Activation::Tanh).unwrap();
    assert_eq!(rebuilt, layer);
}

mod props {
    use super::{ChaCha8Rng, LayerCache, LstmLayer, Layer, SequenceBatch, SequentialModel, Activation, random_check_case, CheckKind, SeedableRng};
    use rand::Rng as _;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn tanh_lstm_hidden_state_is_bounded(seed in any::<u64>(), scale in 0.1f64..20.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let layer = LstmLayer::init(&mut rng, 3, 4, Activation::Tanh);
            let x = SequenceBatch::new(2, 5, 3, (0..30).map(|_| rng.random_range(-scale..scale)).collect()).unwrap();
            let model = SequentialModel::new(vec![Layer::Lstm { layer, return_sequences: true }]).unwrap();
            let (_, cache) = model.forward_train(&x).unwrap();
            let LayerCache::Lstm { steps, .. } = &cache.layers[0] else { unreachable!() };
            for s in steps {
                for v in s.h.as_slice() {
                    prop_assert!(*v > -1.0 && *v < 1.0);
                }
            }
        }

        #[test]
        fn random_lstm_configs_match_finite_differences(seed in 100u64..10_000) {
            let case = random_check_case(CheckKind::Lstm, seed).unwrap();
            let report = crate::oracle::check_model_gradients(&case.model, &case.x, &case.target, 1e-5, None).unwrap();
            prop_assert!(report.passes(1e-4, 1e-6), "{report}");
        }
    }
}
