//! Per-observation importance scores for sequence predictors.
//!
//! All methods compare the predictor's distribution at a step against the
//! distribution obtained when part of the input is counterfactually replaced:
//!
//! * FIT: how much of the prediction shift at step t is explained by
//!   observing a feature subset, with the rest drawn from the generator's
//!   conditional. Signed; zero at the first step.
//! * IFIT: divergence caused by masking a subset at step t alone. Always
//!   non-negative.
//! * WinIT: windowed extension of IFIT attributing the divergence of a
//!   masked window to its individual observations; a window of one
//!   reproduces IFIT exactly.
//! * FO / AFO: occlusion baselines replacing one value with standard normal
//!   noise or a bootstrap draw from the same feature's observed values.
//!
//! Scores are reproducible bit for bit: Monte Carlo noise is keyed by
//! (method family, sample, feature, step, draw), so runs are independent of
//! iteration and scheduling order, and overlapping windows share draws.

mod engine;
mod fit;
mod io;
mod kl;
mod occlusion;
mod runner;
mod winit;

pub use engine::partial_prediction;
pub use fit::fit_score;
pub use io::{read_importance, write_importance, write_windowed, ImportanceMeta};
pub use kl::kl_divergence;
pub use runner::{explain_dataset, explain_sample, ExplainConfig, ImportanceResult, Method};
pub use winit::{ifit_score, winit_scores, WindowedScores};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("feature {feature} out of range ({num_features} features)")]
    FeatureOutOfRange { feature: usize, num_features: usize },
    #[error("step {step} out of range ({num_steps} steps)")]
    StepOutOfRange { step: usize, num_steps: usize },
    #[error("importance file, line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    Model(#[from] crate::seqmodels::ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A subset of feature indices, the unit FIT observes and IFIT/WinIT mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSet {
    num_features: usize,
    indices: Vec<usize>,
}

impl FeatureSet {
    /// Builds a set from indices; they must be in range and free of
    /// duplicates.
    pub fn new(
        num_features: usize,
        indices: impl IntoIterator<Item = usize>,
    ) -> Result<Self, ExplainError> {
        let mut indices: Vec<usize> = indices.into_iter().collect();
        indices.sort_unstable();
        for pair in indices.windows(2) {
            if pair[0] == pair[1] {
                return Err(ExplainError::InvalidArgument(format!(
                    "feature {} listed twice",
                    pair[0]
                )));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= num_features {
                return Err(ExplainError::FeatureOutOfRange {
                    feature: last,
                    num_features,
                });
            }
        }
        Ok(FeatureSet {
            num_features,
            indices,
        })
    }

    pub fn single(num_features: usize, feature: usize) -> Result<Self, ExplainError> {
        FeatureSet::new(num_features, [feature])
    }

    pub fn full(num_features: usize) -> Self {
        FeatureSet {
            num_features,
            indices: (0..num_features).collect(),
        }
    }

    pub fn empty(num_features: usize) -> Self {
        FeatureSet {
            num_features,
            indices: Vec::new(),
        }
    }

    /// Sorted member indices.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.indices.len() == self.num_features
    }

    pub fn contains(&self, feature: usize) -> bool {
        self.indices.binary_search(&feature).is_ok()
    }

    pub fn complement(&self) -> FeatureSet {
        FeatureSet {
            num_features: self.num_features,
            indices: (0..self.num_features)
                .filter(|f| !self.contains(*f))
                .collect(),
        }
    }
}
