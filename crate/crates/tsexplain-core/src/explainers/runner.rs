//! Method dispatch over samples and datasets.

use super::engine::SampleContext;
use super::fit::fit_cell;
use super::occlusion::{occlusion_scores, OcclusionReference};
use super::winit::{winit_feature, WindowedScores};
use super::{ExplainError, FeatureSet};
use crate::rng::sample_key;
use crate::seqdata::{Dataset, TimeSeriesSample};
use crate::seqmodels::{CounterfactualGenerator, SequencePredictor};
use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Temporal-shift decomposition; observes a feature, samples the rest.
    #[serde(rename = "fit")]
    Fit,
    /// Single-step masking divergence.
    #[serde(rename = "ifit")]
    Ifit,
    /// Windowed masking divergence attributed per observation.
    #[serde(rename = "winit")]
    Winit,
    /// Occlusion with standard normal replacements.
    #[serde(rename = "fo")]
    FeatureOcclusion,
    /// Occlusion with bootstrap replacements.
    #[serde(rename = "afo")]
    AugmentedOcclusion,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Fit,
        Method::Ifit,
        Method::Winit,
        Method::FeatureOcclusion,
        Method::AugmentedOcclusion,
    ];

    /// Stable identifier used in file names and reports; WinIT includes its
    /// window length.
    pub fn label(&self, window: usize) -> String {
        match self {
            Method::Fit => "fit".to_string(),
            Method::Ifit => "ifit".to_string(),
            Method::Winit => format!("winit-n{window}"),
            Method::FeatureOcclusion => "fo".to_string(),
            Method::AugmentedOcclusion => "afo".to_string(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Method::Fit => "fit",
            Method::Ifit => "ifit",
            Method::Winit => "winit",
            Method::FeatureOcclusion => "fo",
            Method::AugmentedOcclusion => "afo",
        };
        f.write_str(name)
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fit" => Ok(Method::Fit),
            "ifit" => Ok(Method::Ifit),
            "winit" => Ok(Method::Winit),
            "fo" => Ok(Method::FeatureOcclusion),
            "afo" => Ok(Method::AugmentedOcclusion),
            other => Err(format!(
                "unknown method `{other}` (expected fit, ifit, winit, fo, or afo)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainConfig {
    pub method: Method,
    /// Window length N for WinIT; ignored by the other methods.
    pub window: usize,
    /// Monte Carlo draws per counterfactual expectation.
    pub mc_samples: usize,
    pub seed: u64,
    /// Older windowed variant: the immediate horizon is dropped and the
    /// one-step-later contribution keeps the whole window divergence.
    pub legacy_kl0_zero: bool,
    /// Keep the per-horizon contribution table (WinIT only).
    pub keep_raw: bool,
}

impl ExplainConfig {
    pub fn new(method: Method) -> Self {
        ExplainConfig {
            method,
            window: 8,
            mc_samples: 10,
            seed: 0,
            legacy_kl0_zero: false,
            keep_raw: false,
        }
    }

    pub fn validate(&self) -> Result<(), ExplainError> {
        if self.window == 0 {
            return Err(ExplainError::InvalidArgument("window must be positive".into()));
        }
        if self.mc_samples == 0 {
            return Err(ExplainError::InvalidArgument(
                "mc_samples must be positive".into(),
            ));
        }
        if self.legacy_kl0_zero && self.window < 2 {
            return Err(ExplainError::InvalidArgument(
                "the legacy windowed variant needs a window of at least 2".into(),
            ));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        self.method.label(self.window)
    }
}

/// Importance scores of one sample.
#[derive(Debug, Clone)]
pub struct ImportanceResult {
    pub sample_id: String,
    /// Method label the scores came from, e.g. `winit-n8`.
    pub method: String,
    /// Aggregated per-observation scores, features x steps. Rankings use the
    /// magnitude; the sign is kept for inspection.
    pub scores: Array2<f64>,
    /// Per-horizon contribution tables when requested.
    pub raw: Option<Vec<WindowedScores>>,
    pub wall_seconds: f64,
}

/// Scores one sample. Monte Carlo noise is keyed by the sample id, so the
/// result does not depend on the sample's position in a dataset.
pub fn explain_sample<P, G>(
    predictor: &P,
    generator: &G,
    sample: &TimeSeriesSample,
    config: &ExplainConfig,
) -> Result<ImportanceResult, ExplainError>
where
    P: SequencePredictor,
    G: CounterfactualGenerator,
{
    config.validate()?;
    let started = Instant::now();
    let key = sample_key(&sample.id);
    let ctx = SampleContext::new(predictor, generator, &sample.values, config.seed, key)?;
    let (d, t_len) = sample.values.dim();
    let mut scores = Array2::zeros((d, t_len));
    let mut raw = None;

    match config.method {
        Method::Fit => {
            static STEP_ZERO_WARNING: std::sync::Once = std::sync::Once::new();
            STEP_ZERO_WARNING.call_once(|| {
                log::warn!("fit has no previous prediction at step 0; those cells score 0");
            });
            for f in 0..d {
                let observed = FeatureSet::single(d, f).expect("feature index in range");
                for t in 0..t_len {
                    scores[[f, t]] = fit_cell(&ctx, &observed, t, config.mc_samples);
                }
            }
        }
        Method::Ifit => {
            for f in 0..d {
                for t in 0..t_len {
                    scores[[f, t]] = super::winit::ifit_cell(&ctx, &[f], t, config.mc_samples);
                }
            }
        }
        Method::Winit => {
            let mut tables = Vec::with_capacity(d);
            for f in 0..d {
                let ws = winit_feature(&ctx, f, config);
                for (t, v) in ws.aggregate().into_iter().enumerate() {
                    scores[[f, t]] = v;
                }
                if config.keep_raw {
                    tables.push(ws);
                }
            }
            if config.keep_raw {
                raw = Some(tables);
            }
        }
        Method::FeatureOcclusion | Method::AugmentedOcclusion => {
            let reference = if config.method == Method::FeatureOcclusion {
                OcclusionReference::StandardNormal
            } else {
                OcclusionReference::Bootstrap
            };
            for f in 0..d {
                for (t, v) in occlusion_scores(&ctx, f, reference, config.mc_samples)
                    .into_iter()
                    .enumerate()
                {
                    scores[[f, t]] = v;
                }
            }
        }
    }

    Ok(ImportanceResult {
        sample_id: sample.id.clone(),
        method: config.label(),
        scores,
        raw,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Scores every sample of a dataset, in parallel. Results are in dataset
/// order and identical to calling [`explain_sample`] per sample.
pub fn explain_dataset<P, G>(
    predictor: &P,
    generator: &G,
    data: &Dataset,
    config: &ExplainConfig,
) -> Result<Vec<ImportanceResult>, ExplainError>
where
    P: SequencePredictor + Sync,
    G: CounterfactualGenerator + Sync,
{
    config.validate()?;
    if data.num_features != predictor.num_features() {
        return Err(ExplainError::InvalidArgument(format!(
            "dataset has {} features, predictor expects {}",
            data.num_features,
            predictor.num_features()
        )));
    }
    data.samples
        .par_iter()
        .map(|sample| explain_sample(predictor, generator, sample, config))
        .collect()
}
