use tempora_wasm::{demo_config, lstm_gate_trace, synthetic_temperature, Forecaster};

#[test]
fn synthetic_series_is_hourly_and_seeded() {
    let a = synthetic_temperature(10, 3).unwrap();
    assert_eq!(a.len(), 240);
    assert_eq!(a, synthetic_temperature(10, 3).unwrap());
    assert_ne!(a, synthetic_temperature(10, 4).unwrap());
}

#[test]
fn gate_trace_has_six_values_per_step() {
    let t = lstm_gate_trace(&[1.0, 0.0, -1.0], 0.5, 0.5, 1.0);
    assert_eq!(t.len(), 18);
    // Gates are logistic, so strictly inside (0, 1).
    for step in t.chunks(6) {
        for &gate in [step[0], step[1], step[3]].iter() {
            assert!(gate > 0.0 && gate < 1.0);
        }
    }
}

#[test]
fn zero_weights_keep_the_cell_empty() {
    let t = lstm_gate_trace(&[2.0, -3.0], 0.0, 0.0, 0.0);
    assert!(t.chunks(6).all(|s| s[4] == 0.0 && s[5] == 0.0));
}

#[test]
fn demo_config_is_valid() {
    demo_config(3, 0).validate().unwrap();
}

#[test]
fn forecaster_returns_history_prediction_and_truth() {
    let f = Forecaster::new(30, 2, 1).unwrap();
    assert_eq!(f.train_mse().len(), 2);
    assert_eq!(f.val_mse().len(), 2);
    assert_eq!(f.forecast().len(), f.history_len() + 2 * f.horizon());
    assert!(f.forecast().iter().all(|v| v.is_finite()));
    assert!(f.boundary() < f.hours());
}
