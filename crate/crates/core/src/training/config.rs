use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::Feature;
use crate::error::{Error, Result};
use crate::layers::LayerSpec;
use crate::numerics::Activation;

/// L2 coefficients per parameter group of the first LSTM layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct L2Coefficients {
    pub kernel: f64,
    pub recurrent: f64,
    pub bias: f64,
}

impl L2Coefficients {
    pub fn uniform(lambda: f64) -> Self {
        L2Coefficients {
            kernel: lambda,
            recurrent: lambda,
            bias: lambda,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.kernel == 0.0 && self.recurrent == 0.0 && self.bias == 0.0
    }
}

/// One training regime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub architecture: Vec<LayerSpec>,
    pub features: Vec<Feature>,
    /// Hours of input per window.
    pub history: usize,
    /// Hours predicted per window (`n_output`).
    pub horizon: usize,
    pub batch_size: usize,
    pub epochs: usize,
    /// Training batches per epoch.
    pub evaluation_interval: usize,
    pub l2: L2Coefficients,
    pub learning_rate: f64,
    pub seed: u64,
    /// Global gradient-norm ceiling; 0 disables clipping.
    pub clip_norm: f64,
    pub train_fraction: f64,
    /// Every n-th window enters the per-epoch loss passes; 1 is a full pass.
    pub eval_stride: usize,
}

/// The three named regimes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "run1-7day")]
    Run1SevenDay,
    #[serde(rename = "run2-1day")]
    Run2OneDay,
    #[serde(rename = "run3-12hour")]
    Run3TwelveHour,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Run1SevenDay, Preset::Run2OneDay, Preset::Run3TwelveHour];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Run1SevenDay => "run1-7day",
            Preset::Run2OneDay => "run2-1day",
            Preset::Run3TwelveHour => "run3-12hour",
        }
    }

    pub fn config(self) -> ExperimentConfig {
        let five = vec![Feature::Temp, Feature::Hum, Feature::Airpr, Feature::Solrad, Feature::Windvel];
        let (features, batch_size, evaluation_interval, epochs, history, horizon, l2) = match self {
            Preset::Run1SevenDay => (Feature::ALL.to_vec(), 256, 200, 10, 168, 168, 0.0),
            Preset::Run2OneDay => (five, 512, 100, 20, 168, 24, 0.0),
            Preset::Run3TwelveHour => (five, 512, 150, 30, 48, 12, 0.005),
        };
        ExperimentConfig {
            name: self.name().into(),
            architecture: forecaster_architecture(horizon),
            features,
            history,
            horizon,
            batch_size,
            epochs,
            evaluation_interval,
            l2: L2Coefficients::uniform(l2),
            learning_rate: 0.001,
            seed: 0,
            clip_norm: 5.0,
            train_fraction: 0.78,
            eval_stride: 1,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::config(format!("unknown preset `{s}` (expected run1-7day, run2-1day or run3-12hour)")))
    }
}

/// LSTM(32, tanh, full sequence) → LSTM(16, relu) → Dense(horizon).
pub fn forecaster_architecture(horizon: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::Lstm {
            units: 32,
            activation: Activation::Tanh,
            return_sequences: true,
        },
        LayerSpec::Lstm {
            units: 16,
            activation: Activation::ReLU,
            return_sequences: false,
        },
        LayerSpec::Dense {
            units: horizon,
            activation: Activation::Linear,
        },
    ]
}

/// Compute budget. `Full` keeps the published batch sizes, steps and
/// epochs on nine synthetic years; `Desk` shrinks all of them so the three
/// regimes finish in minutes on one core.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Full,
    Desk,
}

impl Scale {
    pub fn name(self) -> &'static str {
        match self {
            Scale::Full => "full",
            Scale::Desk => "desk",
        }
    }

    pub fn synthetic_years(self) -> usize {
        match self {
            Scale::Full => 9,
            Scale::Desk => 2,
        }
    }

    pub fn apply(self, mut config: ExperimentConfig) -> ExperimentConfig {
        if self == Scale::Desk {
            // (batch, steps per epoch, epochs) per regime, keyed on horizon so
            // edited presets still scale sensibly.
            let (batch, steps, epochs) = match config.horizon {
                h if h > 24 => (32, 30, 10),
                h if h > 12 => (32, 20, 20),
                _ => (32, 25, 30),
            };
            config.batch_size = config.batch_size.min(batch);
            config.evaluation_interval = config.evaluation_interval.min(steps);
            config.epochs = config.epochs.min(epochs);
            config.eval_stride = config.eval_stride.max(7);
        }
        config
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(Scale::Full),
            "desk" => Ok(Scale::Desk),
            other => Err(Error::config(format!("unknown scale `{other}` (expected full or desk)"))),
        }
    }
}

/// A single `key = value` override as written in a config file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Override {
    pub key: String,
    pub value: String,
}

impl ExperimentConfig {
    /// Every violated constraint, or `Ok`.
    pub fn validate(&self) -> Result<()> {
        let mut p = Vec::new();
        for (name, v) in [
            ("history", self.history),
            ("horizon", self.horizon),
            ("batch_size", self.batch_size),
            ("evaluation_interval", self.evaluation_interval),
            ("eval_stride", self.eval_stride),
        ] {
            if v == 0 {
                p.push(format!("{name} must be positive"));
            }
        }
        for (name, v) in [
            ("l2.kernel", self.l2.kernel),
            ("l2.recurrent", self.l2.recurrent),
            ("l2.bias", self.l2.bias),
            ("clip_norm", self.clip_norm),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                p.push(format!("{name} must be a finite non-negative number, got {v}"));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            p.push(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            p.push(format!("train_fraction must lie strictly between 0 and 1, got {}", self.train_fraction));
        }
        if self.features.is_empty() {
            p.push("at least one feature is required".into());
        }
        for (i, f) in self.features.iter().enumerate() {
            if self.features[..i].contains(f) {
                p.push(format!("feature {f} is listed twice"));
            }
        }
        match self.architecture.last() {
            None => p.push("architecture has no layers".into()),
            Some(LayerSpec::Dense { units, .. }) if *units == self.horizon => {}
            Some(LayerSpec::Dense { units, .. }) => p.push(format!("output layer has {units} units but horizon is {}", self.horizon)),
            Some(_) => p.push("the last layer must be dense".into()),
        }
        for spec in &self.architecture {
            let units = match spec {
                LayerSpec::Dense { units, .. } | LayerSpec::SimpleRnn { units, .. } | LayerSpec::Lstm { units, .. } => *units,
            };
            if units == 0 {
                p.push("every layer needs at least one unit".into());
                break;
            }
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(p))
        }
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }

    /// Applies flat `key = value` lines. Keys may use the published
    /// spelling (`batch size`, `evaluation interval`, `historical data`,
    /// `future steps`) or snake_case. Blank lines and `#` comments are
    /// ignored. Changing the horizon also resizes the output layer.
    pub fn apply_overrides(&mut self, text: &str) -> Result<Vec<Override>> {
        let mut applied = Vec::new();
        let mut problems = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim().trim_end_matches('\\').trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                problems.push(format!("line {}: expected `key = value`", n + 1));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            match self.set(key, value) {
                Ok(()) => applied.push(Override {
                    key: key.to_string(),
                    value: value.to_string(),
                }),
                Err(e) => problems.push(format!("line {}: {e}", n + 1)),
            }
        }
        if problems.is_empty() {
            Ok(applied)
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Sets one field by name.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("{key}: cannot parse `{v}`"))
        }
        let norm = key.trim().to_lowercase().replace([' ', '-', '.'], "_");
        match norm.as_str() {
            "name" => self.name = value.to_string(),
            "batch_size" => self.batch_size = num(key, value)?,
            "evaluation_interval" | "steps_per_epoch" => self.evaluation_interval = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "historical_data" | "history" => self.history = num(key, value)?,
            "future_steps" | "horizon" | "n_output" => {
                self.horizon = num(key, value)?;
                if let Some(LayerSpec::Dense { units, .. }) = self.architecture.last_mut() {
                    *units = self.horizon;
                }
            }
            "learning_rate" | "lr" => self.learning_rate = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "clip_norm" => self.clip_norm = num(key, value)?,
            "train_fraction" => self.train_fraction = num(key, value)?,
            "eval_stride" => self.eval_stride = num(key, value)?,
            "l2" => self.l2 = L2Coefficients::uniform(num(key, value)?),
            "l2_kernel" | "kernel_regularizer" => self.l2.kernel = num(key, value)?,
            "l2_recurrent" | "recurrent_regularizer" => self.l2.recurrent = num(key, value)?,
            "l2_bias" | "bias_regularizer" => self.l2.bias = num(key, value)?,
            "features" => {
                self.features = value
                    .split([',', ' '])
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<Feature>().map_err(|e| e.to_string()))
                    .collect::<std::result::Result<_, _>>()?
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_encode_the_three_tables() {
        let r1 = Preset::Run1SevenDay.config();
        assert_eq!((r1.batch_size, r1.evaluation_interval, r1.epochs, r1.history, r1.horizon), (256, 200, 10, 168, 168));
        assert_eq!(r1.features.len(), 6);
        assert!(r1.l2.is_zero());
        let r2 = Preset::Run2OneDay.config();
        assert_eq!((r2.batch_size, r2.evaluation_interval, r2.epochs, r2.history, r2.horizon), (512, 100, 20, 168, 24));
        assert!(!r2.features.contains(&Feature::Winddir));
        assert_eq!(r2.features.len(), 5);
        let r3 = Preset::Run3TwelveHour.config();
        assert_eq!((r3.batch_size, r3.evaluation_interval, r3.epochs, r3.history, r3.horizon), (512, 150, 30, 48, 12));
        assert_eq!(r3.l2, L2Coefficients::uniform(0.005));
        for p in Preset::ALL {
            p.config().validate().unwrap();
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
    }

    #[test]
    fn output_width_matches_horizon() {
        let r1 = Preset::Run1SevenDay.config();
        assert!(matches!(r1.architecture.last(), Some(LayerSpec::Dense { units: 168, .. })));
    }

    #[test]
    fn validation_lists_every_problem() {
        let mut c = Preset::Run2OneDay.config();
        c.batch_size = 0;
        c.learning_rate = -1.0;
        c.l2.bias = -0.1;
        c.horizon = 12;
        match c.validate() {
            Err(Error::Config(p)) => assert_eq!(p.len(), 4, "{p:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overrides_accept_published_spellings() {
        let mut c = Preset::Run1SevenDay.config();
        let text = "batch size = 64 \\\nevaluation interval = 5\n# comment\nfuture steps = 24\nfeatures = temp, hum\nl2 = 0.01\n";
        let applied = c.apply_overrides(text).unwrap();
        assert_eq!(applied.len(), 5);
        assert_eq!((c.batch_size, c.evaluation_interval, c.horizon), (64, 5, 24));
        assert_eq!(c.features, vec![Feature::Temp, Feature::Hum]);
        assert_eq!(c.l2, L2Coefficients::uniform(0.01));
        c.validate().unwrap();
        assert!(c.apply_overrides("colour = red\nepochs = many\n").is_err());
    }

    #[test]
    fn desk_scale_shrinks_but_keeps_shape() {
        for p in Preset::ALL {
            let full = p.config();
            let desk = Scale::Desk.apply(full.clone());
            assert_eq!((desk.history, desk.horizon, &desk.features, desk.l2), (full.history, full.horizon, &full.features, full.l2));
            assert!(desk.batch_size <= full.batch_size && desk.epochs <= full.epochs);
            desk.validate().unwrap();
            assert_eq!(Scale::Full.apply(full.clone()), full);
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = Preset::Run2OneDay.config();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 7;
        assert_ne!(a.hash(), b.hash());
    }
}
