//! Feature importance from the prediction's temporal shift.
//!
//! The score of an observed subset S at step t is
//!
//! ```text
//! KL(p_t || p_{t-1}) - KL(p_t || E[p(y | x_0..x_{t-1}, x_t^S, X^rest)])
//! ```
//!
//! where X^rest is drawn from the generator's conditional for step t given
//! the true history. A subset that accounts for the whole shift scores the
//! full first term; an uninformative one scores near zero, and the score can
//! go negative when sampling the rest explains the shift better than
//! observing S. The expectation follows the original formulation: every
//! Monte Carlo draw replays the predictor over the full prefix, so the cost
//! of one score grows with t.

use super::engine::SampleContext;
use super::kl::kl_divergence;
use super::runner::ExplainConfig;
use super::{ExplainError, FeatureSet};
use crate::rng::tag;
use crate::seqmodels::{CounterfactualGenerator, SequencePredictor};
use ndarray::Array2;

/// Score of observing `observed` at `step`, against a standalone noise
/// stream (batch runs key their streams by sample id instead).
pub fn fit_score<P, G>(
    predictor: &P,
    generator: &G,
    values: &Array2<f64>,
    observed: &FeatureSet,
    step: usize,
    config: &ExplainConfig,
) -> Result<f64, ExplainError>
where
    P: SequencePredictor,
    G: CounterfactualGenerator,
{
    config.validate()?;
    if observed.num_features() != values.nrows() {
        return Err(ExplainError::InvalidArgument(format!(
            "feature set is over {} features, series has {}",
            observed.num_features(),
            values.nrows()
        )));
    }
    if step >= values.ncols() {
        return Err(ExplainError::StepOutOfRange {
            step,
            num_steps: values.ncols(),
        });
    }
    let ctx = SampleContext::new(predictor, generator, values, config.seed, 0)?;
    Ok(fit_cell(&ctx, observed, step, config.mc_samples))
}

/// The score at one (subset, step) cell from a prepared context. Step 0 has
/// no previous prediction to diverge from and scores zero.
pub(crate) fn fit_cell<P, G>(
    ctx: &SampleContext<'_, P, G>,
    observed: &FeatureSet,
    step: usize,
    mc_samples: usize,
) -> f64
where
    P: SequencePredictor,
    G: CounterfactualGenerator,
{
    if step == 0 {
        return 0.0;
    }
    let shift = kl_divergence(&ctx.true_dists[step], &ctx.true_dists[step - 1]);
    let sampled = observed.complement();
    if sampled.is_empty() {
        // Everything observed: the partial expectation is the true
        // distribution itself, no sampling involved.
        return shift;
    }
    let partial = ctx.prefix_replay_dist(sampled.indices(), step, mc_samples, tag::FIT);
    shift - kl_divergence(&ctx.true_dists[step], &partial)
}

#[cfg(test)]
mod tests {
    use super::super::engine::testkit::{toy_models, toy_series};
    use super::*;

    fn config() -> ExplainConfig {
        ExplainConfig {
            mc_samples: 6,
            seed: 12,
            ..ExplainConfig::new(super::super::Method::Fit)
        }
    }

    #[test]
    fn step_zero_scores_zero() {
        let (predictor, generator) = toy_models(3, 8);
        let values = toy_series(3, 10);
        let set = FeatureSet::single(3, 1).unwrap();
        let score = fit_score(&predictor, &generator, &values, &set, 0, &config()).unwrap();
        assert_eq!(score, 0.0);
    }

    #[test]
    fn fully_observed_set_scores_the_exact_temporal_shift() {
        let (predictor, generator) = toy_models(3, 8);
        let values = toy_series(3, 10);
        let full = FeatureSet::full(3);
        let cfg = config();
        let ctx = SampleContext::new(&predictor, &generator, &values, cfg.seed, 0).unwrap();
        for step in 1..10 {
            let score =
                fit_score(&predictor, &generator, &values, &full, step, &cfg).unwrap();
            let shift = kl_divergence(&ctx.true_dists[step], &ctx.true_dists[step - 1]);
            assert_eq!(score.to_bits(), shift.to_bits(), "step {step}");
        }
    }

    #[test]
    fn scores_are_deterministic() {
        let (predictor, generator) = toy_models(3, 8);
        let values = toy_series(3, 10);
        let set = FeatureSet::single(3, 2).unwrap();
        let a = fit_score(&predictor, &generator, &values, &set, 7, &config()).unwrap();
        let b = fit_score(&predictor, &generator, &values, &set, 7, &config()).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn empty_set_is_allowed() {
        // Observing nothing compares the shift against a fully resampled
        // step; the score is defined, typically near zero.
        let (predictor, generator) = toy_models(2, 6);
        let values = toy_series(2, 8);
        let empty = FeatureSet::empty(2);
        let score = fit_score(&predictor, &generator, &values, &empty, 3, &config()).unwrap();
        assert!(score.is_finite());
    }

    #[test]
    fn rejects_out_of_range_step() {
        let (predictor, generator) = toy_models(2, 6);
        let values = toy_series(2, 8);
        let set = FeatureSet::single(2, 0).unwrap();
        assert!(matches!(
            fit_score(&predictor, &generator, &values, &set, 8, &config()).unwrap_err(),
            ExplainError::StepOutOfRange { step: 8, num_steps: 8 }
        ));
    }
}
