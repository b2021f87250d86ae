//! Windowed importance: masking divergence attributed per observation.
//!
//! For a feature masked over a window starting at s, let
//!
//! ```text
//! kl[s][j] = KL(p_{s+j} || partial with the feature masked over s..s+j)
//! ```
//!
//! The contribution of the observation at s to the prediction j steps later
//! is the first difference `C(s, j) = kl[s][j] - kl[s+1][j-1]`, with
//! `C(s, 0) = kl[s][0]`. Contributions over a window ending at t telescope
//! back to the full-window divergence exactly, because every `kl` value is
//! computed once and shared. A window of one step reduces to IFIT.

use super::engine::SampleContext;
use super::kl::kl_divergence;
use super::runner::ExplainConfig;
use super::{ExplainError, FeatureSet};
use crate::rng::tag;
use crate::seqmodels::{CounterfactualGenerator, SequencePredictor};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Per-horizon contributions of one feature's observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedScores {
    pub feature: usize,
    /// Configured window length N.
    pub window: usize,
    /// `contributions[s][n]` is the effect of the observation at step s on
    /// the prediction at step s + n. Rows shorten near the end of the series.
    pub contributions: Vec<Vec<f64>>,
}

impl WindowedScores {
    /// One score per step: the contribution largest in magnitude, sign kept;
    /// ties resolve to the smallest horizon.
    pub fn aggregate(&self) -> Vec<f64> {
        self.contributions
            .iter()
            .map(|row| {
                let mut best = 0.0;
                let mut best_abs = f64::NEG_INFINITY;
                for &c in row {
                    if c.abs() > best_abs {
                        best_abs = c.abs();
                        best = c;
                    }
                }
                best
            })
            .collect()
    }
}

/// Divergence caused by masking `masked` at `step` alone, conditioned on the
/// true history before it. Non-negative. Uses a standalone noise stream;
/// batch runs key their streams by sample id instead.
pub fn ifit_score<P, G>(
    predictor: &P,
    generator: &G,
    values: &Array2<f64>,
    masked: &FeatureSet,
    step: usize,
    config: &ExplainConfig,
) -> Result<f64, ExplainError>
where
    P: SequencePredictor,
    G: CounterfactualGenerator,
{
    config.validate()?;
    if masked.num_features() != values.nrows() {
        return Err(ExplainError::InvalidArgument(format!(
            "feature set is over {} features, series has {}",
            masked.num_features(),
            values.nrows()
        )));
    }
    if step >= values.ncols() {
        return Err(ExplainError::StepOutOfRange {
            step,
            num_steps: values.ncols(),
        });
    }
    if masked.is_empty() {
        return Err(ExplainError::InvalidArgument(
            "masking an empty feature set is a no-op".into(),
        ));
    }
    let ctx = SampleContext::new(predictor, generator, values, config.seed, 0)?;
    Ok(ifit_cell(&ctx, masked.indices(), step, config.mc_samples))
}

pub(crate) fn ifit_cell<P, G>(
    ctx: &SampleContext<'_, P, G>,
    masked: &[usize],
    step: usize,
    mc_samples: usize,
) -> f64
where
    P: SequencePredictor,
    G: CounterfactualGenerator,
{
    let dists = ctx.window_dists(masked, step, 1, mc_samples, tag::WINDOW);
    kl_divergence(&ctx.true_dists[step], &dists[0])
}

/// Windowed contributions of one feature over the whole series, against a
/// standalone noise stream.
pub fn winit_scores<P, G>(
    predictor: &P,
    generator: &G,
    values: &Array2<f64>,
    feature: usize,
    config: &ExplainConfig,
) -> Result<WindowedScores, ExplainError>
where
    P: SequencePredictor,
    G: CounterfactualGenerator,
{
    config.validate()?;
    if feature >= values.nrows() {
        return Err(ExplainError::FeatureOutOfRange {
            feature,
            num_features: values.nrows(),
        });
    }
    let ctx = SampleContext::new(predictor, generator, values, config.seed, 0)?;
    Ok(winit_feature(&ctx, feature, config))
}

pub(crate) fn winit_feature<P, G>(
    ctx: &SampleContext<'_, P, G>,
    feature: usize,
    config: &ExplainConfig,
) -> WindowedScores
where
    P: SequencePredictor,
    G: CounterfactualGenerator,
{
    let t_len = ctx.num_steps();
    let n = config.window;
    let masked = [feature];

    // One rollout per window start; every kl value is computed exactly once.
    let mut kls: Vec<Vec<f64>> = Vec::with_capacity(t_len);
    for s in 0..t_len {
        let len = n.min(t_len - s);
        let dists = ctx.window_dists(&masked, s, len, config.mc_samples, tag::WINDOW);
        kls.push(
            (0..len)
                .map(|j| kl_divergence(&ctx.true_dists[s + j], &dists[j]))
                .collect(),
        );
    }

    let mut contributions = Vec::with_capacity(t_len);
    for s in 0..t_len {
        let len = kls[s].len();
        let mut row = Vec::with_capacity(len);
        for j in 0..len {
            let c = if j == 0 {
                if config.legacy_kl0_zero {
                    0.0
                } else {
                    kls[s][0]
                }
            } else if j == 1 && config.legacy_kl0_zero {
                kls[s][1]
            } else {
                kls[s][j] - kls[s + 1][j - 1]
            };
            row.push(c);
        }
        contributions.push(row);
    }
    WindowedScores {
        feature,
        window: n,
        contributions,
    }
}
