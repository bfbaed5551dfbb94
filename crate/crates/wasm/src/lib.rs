//! Browser bindings: a synthetic station, a one-unit LSTM gate trace, and a
//! small forecaster trained in the page.
//!
//! Every function returns flat `f64` arrays so the page needs no glue beyond
//! what wasm-bindgen generates.

use tempora::data::{generate_synthetic, Feature, SeriesFrame, SyntheticWeatherSpec};
use tempora::evaluate::forecast_at;
use tempora::oracle::{scalar_lstm_trace, ScalarActivation, ScalarLstmWeights};
use tempora::training::{build_model, train_with, ExperimentConfig, ExperimentData, Preset};
use wasm_bindgen::prelude::*;

const HISTORY: usize = 48;
const HORIZON: usize = 12;

fn js_err(e: tempora::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn station(days: u32, seed: u32) -> Result<SeriesFrame, tempora::Error> {
    let spec = SyntheticWeatherSpec {
        days: days.max(3) as usize,
        ..SyntheticWeatherSpec::reference(1, seed as u64)
    };
    generate_synthetic(&spec)
}

/// Hourly synthetic temperatures (°C).
#[wasm_bindgen]
pub fn synthetic_temperature(days: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    let frame = station(days, seed).map_err(js_err)?;
    Ok(frame.column(Feature::Temp).map_err(js_err)?.to_vec())
}

/// Trace of a one-unit LSTM over `inputs`. Every step appends
/// `[i, f, g, o, c, h]`.
#[wasm_bindgen]
pub fn lstm_gate_trace(inputs: &[f64], input_weight: f64, recurrent_weight: f64, forget_bias: f64) -> Vec<f64> {
    let w = ScalarLstmWeights {
        w_x: [input_weight; 4],
        w_h: [recurrent_weight; 4],
        b: [0.0, forget_bias, 0.0, 0.0],
        cell_activation: ScalarActivation::Tanh,
    };
    scalar_lstm_trace(&w, inputs).into_iter().flat_map(|s| [s.i, s.f, s.g, s.o, s.c, s.h]).collect()
}

/// The 12-hour preset shrunk to browser size.
pub fn demo_config(epochs: usize, seed: u32) -> ExperimentConfig {
    let mut c = Preset::Run3TwelveHour.config();
    c.name = "browser".into();
    c.batch_size = 16;
    c.evaluation_interval = 15;
    c.epochs = epochs;
    c.history = HISTORY;
    c.eval_stride = 5;
    c.seed = seed as u64;
    c
}

/// Trains on a synthetic station and forecasts the first held-out window.
#[wasm_bindgen]
pub struct Forecaster {
    frame: SeriesFrame,
    config: ExperimentConfig,
    boundary: usize,
    train_mse: Vec<f64>,
    val_mse: Vec<f64>,
    forecast: Vec<f64>,
}

#[wasm_bindgen]
impl Forecaster {
    #[wasm_bindgen(constructor)]
    pub fn new(days: u32, epochs: u32, seed: u32) -> Result<Forecaster, JsError> {
        let frame = station(days, seed).map_err(js_err)?;
        let config = demo_config(epochs as usize, seed);
        config.validate().map_err(js_err)?;
        let data = ExperimentData::prepare(&frame, &config).map_err(js_err)?;
        let model = build_model(&config).map_err(js_err)?;
        let out = train_with(model, &config, &data.train, &data.test, |_, _, _| {}).map_err(js_err)?;
        let result = forecast_at(&out.model, &frame, &config.features, config.history, &data.stats, data.boundary).map_err(js_err)?;
        let forecast = [result.history, result.predicted, result.actual].concat();
        Ok(Forecaster {
            boundary: data.boundary,
            train_mse: out.history.train_mse,
            val_mse: out.history.val_mse,
            frame,
            config,
            forecast,
        })
    }

    pub fn train_mse(&self) -> Vec<f64> {
        self.train_mse.clone()
    }

    pub fn val_mse(&self) -> Vec<f64> {
        self.val_mse.clone()
    }

    /// `history ++ predicted ++ actual` in °C for the first held-out window.
    pub fn forecast(&self) -> Vec<f64> {
        self.forecast.clone()
    }

    pub fn history_len(&self) -> usize {
        self.config.history
    }

    pub fn horizon(&self) -> usize {
        HORIZON
    }

    /// Row of the first held-out hour.
    pub fn boundary(&self) -> usize {
        self.boundary
    }

    pub fn hours(&self) -> usize {
        self.frame.len()
    }
}
