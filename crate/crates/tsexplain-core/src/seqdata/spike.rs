//! Spike benchmark construction and dataset splitting.

use super::{inject_spikes, narma_sequence, DataError, Dataset, TimeSeriesSample};
use crate::rng::{stream, tag};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use std::collections::BTreeMap;

const MAX_RESAMPLE_ATTEMPTS: usize = 100;

/// Configuration of the spike benchmark.
///
/// Every feature is an independent NARMA series plus a per-feature linear
/// trend, with spikes injected independently per feature. The per-step label
/// switches from 0 to 1 at (first spike step in feature 0) + `label_delay`
/// and stays 1; exactly that spike cell carries ground-truth importance 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeConfig {
    pub num_samples: usize,
    pub num_features: usize,
    pub num_steps: usize,
    pub narma_order: usize,
    pub spike_probability: f64,
    pub spike_magnitude: f64,
    /// Steps between the first feature-0 spike and the label switch.
    pub label_delay: usize,
    /// One slope per feature; slope s adds s * t to step t.
    pub trend_slopes: Vec<f64>,
    pub seed: u64,
}

impl SpikeConfig {
    /// The delay-0 variant at the stated benchmark scale.
    pub fn spike(num_samples: usize, seed: u64) -> Self {
        SpikeConfig {
            num_samples,
            num_features: 3,
            num_steps: 80,
            narma_order: 10,
            spike_probability: 0.05,
            spike_magnitude: 2.0,
            label_delay: 0,
            trend_slopes: vec![0.0, 0.0, 0.0],
            seed,
        }
    }

    /// The delayed variant: label follows the spike by two steps and two
    /// features carry opposing linear trends.
    pub fn delayed_spike(num_samples: usize, seed: u64) -> Self {
        SpikeConfig {
            label_delay: 2,
            trend_slopes: vec![0.0, 0.01, -0.01],
            ..Self::spike(num_samples, seed)
        }
    }

    fn validate(&self) -> Result<(), DataError> {
        if self.num_samples == 0 {
            return Err(DataError::InvalidArgument("num_samples must be positive".into()));
        }
        if self.num_features == 0 {
            return Err(DataError::InvalidArgument("num_features must be positive".into()));
        }
        if self.num_steps < 2 {
            return Err(DataError::InvalidArgument(
                "num_steps must be at least 2 so a spike can occur after step 0".into(),
            ));
        }
        if self.narma_order == 0 {
            return Err(DataError::InvalidArgument("narma_order must be positive".into()));
        }
        if !(self.spike_probability > 0.0 && self.spike_probability < 1.0) {
            return Err(DataError::InvalidArgument(format!(
                "spike_probability {} outside (0, 1)",
                self.spike_probability
            )));
        }
        if self.label_delay >= self.num_steps {
            return Err(DataError::InvalidArgument(format!(
                "label_delay {} must be smaller than num_steps {}",
                self.label_delay, self.num_steps
            )));
        }
        if self.trend_slopes.len() != self.num_features {
            return Err(DataError::InvalidArgument(format!(
                "trend_slopes has {} entries for {} features",
                self.trend_slopes.len(),
                self.num_features
            )));
        }
        Ok(())
    }
}

/// Builds the benchmark. Samples whose first feature-0 spike would push the
/// label switch past the end of the series (or that have no feature-0 spike
/// at all) are regenerated from a fresh stream, up to 100 attempts each.
pub fn make_spike_dataset(config: &SpikeConfig) -> Result<Dataset, DataError> {
    config.validate()?;
    let samples: Result<Vec<TimeSeriesSample>, DataError> = (0..config.num_samples)
        .into_par_iter()
        .map(|i| build_sample(config, i))
        .collect();
    let mut metadata = BTreeMap::new();
    metadata.insert("generator".into(), "spike-narma".into());
    metadata.insert("seed".into(), config.seed.to_string());
    metadata.insert("narma_order".into(), config.narma_order.to_string());
    metadata.insert("spike_probability".into(), config.spike_probability.to_string());
    metadata.insert("spike_magnitude".into(), config.spike_magnitude.to_string());
    metadata.insert("label_delay".into(), config.label_delay.to_string());
    metadata.insert(
        "trend_slopes".into(),
        config
            .trend_slopes
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(","),
    );
    Ok(Dataset {
        num_features: config.num_features,
        num_steps: config.num_steps,
        num_classes: 2,
        metadata,
        samples: samples?,
    })
}

fn build_sample(config: &SpikeConfig, index: usize) -> Result<TimeSeriesSample, DataError> {
    let d = config.num_features;
    let t_len = config.num_steps;
    for attempt in 0..MAX_RESAMPLE_ATTEMPTS {
        let mut values = Array2::zeros((d, t_len));
        let mut first_feature0_spike = None;
        for feature in 0..d {
            let ctx = [tag::NARMA, index as u64, attempt as u64, feature as u64];
            let mut base = narma_sequence(
                config.narma_order,
                t_len,
                &mut stream(config.seed, &ctx),
            )?;
            let slope = config.trend_slopes[feature];
            for (t, v) in base.iter_mut().enumerate() {
                *v += slope * t as f64;
            }
            let ctx = [tag::SPIKE, index as u64, attempt as u64, feature as u64];
            let inj = inject_spikes(
                &base,
                config.spike_probability,
                config.spike_magnitude,
                &mut stream(config.seed, &ctx),
            )?;
            if feature == 0 {
                first_feature0_spike = inj.spike_steps.first().copied();
            }
            for (t, v) in inj.values.iter().enumerate() {
                values[[feature, t]] = *v;
            }
        }
        let Some(first) = first_feature0_spike else { continue };
        let switch = first + config.label_delay;
        if switch > t_len - 1 {
            continue;
        }
        let labels: Vec<u32> = (0..t_len).map(|t| u32::from(t >= switch)).collect();
        let mut gt = Array2::zeros((d, t_len));
        gt[[0, first]] = 1;
        return Ok(TimeSeriesSample {
            id: format!("s{index:05}"),
            values,
            labels,
            gt_importance: Some(gt),
        });
    }
    Err(DataError::InfeasibleSpikeConfig {
        sample_index: index,
        attempts: MAX_RESAMPLE_ATTEMPTS,
    })
}

/// Splits a dataset by a deterministic seeded shuffle. The train side gets
/// round(n * train_fraction) samples; both sides must end up non-empty.
pub fn split_dataset(
    dataset: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DataError> {
    if dataset.samples.is_empty() {
        return Err(DataError::InvalidArgument("cannot split an empty dataset".into()));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::InvalidArgument(format!(
            "train_fraction {train_fraction} outside (0, 1)"
        )));
    }
    let n = dataset.samples.len();
    let n_train = (n as f64 * train_fraction).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(DataError::InvalidArgument(format!(
            "train_fraction {train_fraction} leaves an empty side for {n} samples"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(seed, &[tag::SPLIT]));
    let pick = |ids: &[usize], role: &str| {
        let mut metadata = dataset.metadata.clone();
        metadata.insert("split".into(), role.into());
        Dataset {
            num_features: dataset.num_features,
            num_steps: dataset.num_steps,
            num_classes: dataset.num_classes,
            metadata,
            samples: ids.iter().map(|&i| dataset.samples[i].clone()).collect(),
        }
    };
    Ok((pick(&order[..n_train], "train"), pick(&order[n_train..], "test")))
}
