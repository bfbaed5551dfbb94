//! Multivariate weather forecasting with hand-written recurrent networks.
//!
//! The crate covers the whole pipeline: dense linear algebra ([`numerics`]),
//! Dense / SimpleRNN / LSTM layers with backpropagation through time
//! ([`layers`]), CSV ingestion and windowing ([`data`]), Adam training with L2
//! regularization ([`training`]), forecast metrics and plots ([`evaluate`]),
//! and independent correctness references ([`oracle`]).

pub mod checkpoint;
pub mod data;
pub mod error;
pub mod evaluate;
pub mod layers;
pub mod numerics;
pub mod oracle;
mod parallel;
pub mod training;

pub use error::{Error, ErrorClass, Result};
pub use layers::{SequenceBatch, SequentialModel};
pub use numerics::{Activation, Matrix};
