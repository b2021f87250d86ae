//! Recurrent predictor and counterfactual generator.
//!
//! Both models share a single-layer gated recurrent cell with hand-rolled
//! reverse-mode gradients. The predictor emits a per-step class distribution
//! (a causal readout of the hidden state); the generator emits per-feature
//! Gaussian parameters for the next observation given the history. Training
//! uses an adaptive first-order optimizer with global gradient-norm clipping
//! and is bit-reproducible for a fixed config and seed.

mod checkpoint;
mod generator;
mod gru;
pub(crate) mod linalg;
mod optim;
mod predictor;

pub use checkpoint::{load_generator, load_predictor, save_generator, save_predictor};
pub use generator::{
    generator_sample_window, train_generator, GeneratorMode, GeneratorModel, GeneratorState,
};
pub use predictor::{train_predictor, PredictorModel, PredictorState};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("training diverged (non-finite loss) at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
    #[error("not a model checkpoint (bad magic bytes)")]
    BadMagic,
    #[error("unsupported checkpoint format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("checkpoint holds a {found} model, expected {expected}")]
    WrongKind { expected: &'static str, found: String },
    #[error("checkpoint truncated at byte offset {offset}")]
    Truncated { offset: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Smallest probability kept after flooring; guarantees finite KL terms.
pub const PROB_FLOOR: f64 = 1e-12;

/// A distribution over classes: strictly positive entries summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveDistribution {
    probs: Vec<f64>,
}

impl PredictiveDistribution {
    /// Stable softmax of the logits, floored at [`PROB_FLOOR`].
    pub fn from_logits(logits: &[f64]) -> Self {
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        normalize(&mut probs);
        PredictiveDistribution { probs }
    }

    /// Validates, floors, and renormalizes an explicit probability vector.
    pub fn from_probs(mut probs: Vec<f64>) -> Result<Self, ModelError> {
        if probs.len() < 2 {
            return Err(ModelError::InvalidArgument(
                "a distribution needs at least two classes".into(),
            ));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(ModelError::InvalidArgument(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        if probs.iter().sum::<f64>() <= 0.0 {
            return Err(ModelError::InvalidArgument("probabilities sum to zero".into()));
        }
        normalize(&mut probs);
        Ok(PredictiveDistribution { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Floors then renormalizes in place. Renormalization is skipped when the sum
/// is already within 1e-12 of one, so the operation is idempotent and a
/// single-draw Monte Carlo average reproduces its input exactly.
fn normalize(probs: &mut [f64]) {
    for p in probs.iter_mut() {
        if !(*p >= PROB_FLOOR) {
            *p = PROB_FLOOR;
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        for p in probs.iter_mut() {
            *p /= sum;
            // Scaling can push a floored entry a hair back under; clamp it
            // rather than renormalizing again (the residual is ~1e-24).
            if !(*p >= PROB_FLOOR) {
                *p = PROB_FLOOR;
            }
        }
    }
}

/// A causal sequence model emitting one class distribution per step.
pub trait SequencePredictor {
    type State: Clone;
    fn num_features(&self) -> usize;
    fn num_classes(&self) -> usize;
    fn init_state(&self) -> Self::State;
    /// Consumes one observation vector and returns p(y | history so far).
    fn step(&self, state: &mut Self::State, x: &[f64]) -> PredictiveDistribution;
    /// Distributions at every step of a full series (feature-major D x T).
    fn forward(&self, series: &ndarray::Array2<f64>) -> Vec<PredictiveDistribution> {
        let (d, t_len) = series.dim();
        assert_eq!(d, self.num_features(), "series feature count mismatch");
        let mut state = self.init_state();
        let mut x = vec![0.0; d];
        (0..t_len)
            .map(|t| {
                for (i, v) in x.iter_mut().enumerate() {
                    *v = series[[i, t]];
                }
                self.step(&mut state, &x)
            })
            .collect()
    }
}

/// A forecaster of the next observation given the history, as an independent
/// Gaussian per feature.
pub trait CounterfactualGenerator {
    type State: Clone;
    fn num_features(&self) -> usize;
    fn init_state(&self) -> Self::State;
    /// Consumes one observation vector.
    fn advance(&self, state: &mut Self::State, x: &[f64]);
    /// Mean and standard deviation of the next value of each requested
    /// feature, written into the output slices (aligned with `features`).
    fn next_dist(&self, state: &Self::State, features: &[usize], means: &mut [f64], stds: &mut [f64]);
}

/// Per-epoch training diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub valid_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub valid_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    pub wall_seconds: f64,
}

/// Optimization and schedule settings shared by both models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub grad_clip: f64,
    /// Epochs without improvement before stopping early; 0 disables.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 64,
            epochs: 40,
            batch_size: 32,
            learning_rate: 1e-3,
            grad_clip: 5.0,
            patience: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.hidden == 0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(ModelError::InvalidArgument(
                "hidden, epochs, and batch_size must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::InvalidArgument("learning_rate must be positive".into()));
        }
        if !(self.grad_clip > 0.0 && self.grad_clip.is_finite()) {
            return Err(ModelError::InvalidArgument("grad_clip must be positive".into()));
        }
        Ok(())
    }
}
