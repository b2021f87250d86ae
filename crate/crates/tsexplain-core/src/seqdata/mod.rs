//! Synthetic benchmarks and dataset handling.
//!
//! A dataset is a collection of multivariate series with per-step integer
//! labels and an optional per-observation ground-truth importance mask. The
//! synthetic generators build NARMA-driven series with injected spikes; the
//! label switches from 0 to 1 a configurable delay after the first spike in
//! feature 0, and exactly that spike cell is marked as ground truth.

mod io;
mod narma;
mod spike;

pub use io::{read_dataset, read_dataset_file, write_dataset, write_dataset_file};
pub use narma::{inject_spikes, narma_sequence, SpikeInjection};
pub use spike::{make_spike_dataset, split_dataset, SpikeConfig};

use ndarray::Array2;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("NARMA recurrence left the stable range (|y| >= 100) at step {step}")]
    NarmaDiverged { step: usize },
    #[error(
        "no admissible first spike for sample {sample_index} after {attempts} attempts; \
         loosen spike_probability, label_delay, or num_steps"
    )]
    InfeasibleSpikeConfig { sample_index: usize, attempts: usize },
    #[error("sample {id}: non-finite value at feature {feature}, step {step}")]
    NonFiniteValue { id: String, feature: usize, step: usize },
    #[error("sample {id}: {reason}")]
    MalformedSample { id: String, reason: String },
    #[error("duplicate sample id {id}")]
    DuplicateId { id: String },
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One multivariate series with per-step labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesSample {
    pub id: String,
    /// Feature-major values, shape D x T.
    pub values: Array2<f64>,
    /// Per-step class labels, length T, each in [0, K).
    pub labels: Vec<u32>,
    /// Optional per-observation ground truth, shape D x T, entries 0 or 1.
    pub gt_importance: Option<Array2<u8>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub num_features: usize,
    pub num_steps: usize,
    pub num_classes: usize,
    pub metadata: BTreeMap<String, String>,
    pub samples: Vec<TimeSeriesSample>,
}

impl Dataset {
    /// Checks every sample against the header shapes and value constraints.
    pub fn validate(&self) -> Result<(), DataError> {
        if self.num_features == 0 || self.num_steps == 0 {
            return Err(DataError::InvalidArgument(
                "num_features and num_steps must be positive".into(),
            ));
        }
        if self.num_classes < 2 {
            return Err(DataError::InvalidArgument(
                "num_classes must be at least 2".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for s in &self.samples {
            if !seen.insert(s.id.as_str()) {
                return Err(DataError::DuplicateId { id: s.id.clone() });
            }
            if s.values.dim() != (self.num_features, self.num_steps) {
                return Err(DataError::MalformedSample {
                    id: s.id.clone(),
                    reason: format!(
                        "values shape {:?} does not match header ({}, {})",
                        s.values.dim(),
                        self.num_features,
                        self.num_steps
                    ),
                });
            }
            for ((d, t), v) in s.values.indexed_iter() {
                if !v.is_finite() {
                    return Err(DataError::NonFiniteValue {
                        id: s.id.clone(),
                        feature: d,
                        step: t,
                    });
                }
            }
            if s.labels.len() != self.num_steps {
                return Err(DataError::MalformedSample {
                    id: s.id.clone(),
                    reason: format!(
                        "labels length {} does not match num_steps {}",
                        s.labels.len(),
                        self.num_steps
                    ),
                });
            }
            if let Some(bad) = s.labels.iter().find(|&&l| l as usize >= self.num_classes) {
                return Err(DataError::MalformedSample {
                    id: s.id.clone(),
                    reason: format!("label {} out of range for {} classes", bad, self.num_classes),
                });
            }
            if let Some(gt) = &s.gt_importance {
                if gt.dim() != (self.num_features, self.num_steps) {
                    return Err(DataError::MalformedSample {
                        id: s.id.clone(),
                        reason: "gt_importance shape does not match values".into(),
                    });
                }
                if gt.iter().any(|&g| g > 1) {
                    return Err(DataError::MalformedSample {
                        id: s.id.clone(),
                        reason: "gt_importance entries must be 0 or 1".into(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Per-feature mean over all samples and steps. Used as the fill value
    /// when masking the first step of a series.
    pub fn feature_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.num_features];
        let mut count = 0usize;
        for s in &self.samples {
            for d in 0..self.num_features {
                for t in 0..self.num_steps {
                    sums[d] += s.values[[d, t]];
                }
            }
            count += self.num_steps;
        }
        if count == 0 {
            return sums;
        }
        sums.iter().map(|v| v / count as f64).collect()
    }

    /// All observed values of one feature, flattened over samples and steps.
    /// This is the bootstrap pool for the AFO baseline.
    pub fn feature_pool(&self, feature: usize) -> Vec<f64> {
        let mut pool = Vec::with_capacity(self.samples.len() * self.num_steps);
        for s in &self.samples {
            for t in 0..self.num_steps {
                pool.push(s.values[[feature, t]]);
            }
        }
        pool
    }
}
