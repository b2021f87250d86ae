//! Occlusion baselines: replace one observation and measure the divergence.
//!
//! Both variants perturb a single (feature, step) cell, leaving the history
//! untouched, and score `KL(p_t || average perturbed prediction)`:
//!
//! * feature occlusion (FO) replaces the value with standard normal noise;
//! * augmented feature occlusion (AFO) replaces it with a bootstrap draw
//!   from the same feature's observed values elsewhere in the sample, so the
//!   replacement stays on-distribution.

use super::engine::{keyed_normal, SampleContext};
use super::kl::kl_divergence;
use crate::rng::{stream, tag};
use crate::seqmodels::{CounterfactualGenerator, PredictiveDistribution, SequencePredictor};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum OcclusionReference {
    StandardNormal,
    Bootstrap,
}

/// Scores every step of one feature.
pub(crate) fn occlusion_scores<P, G>(
    ctx: &SampleContext<'_, P, G>,
    feature: usize,
    reference: OcclusionReference,
    mc_samples: usize,
) -> Vec<f64>
where
    P: SequencePredictor,
    G: CounterfactualGenerator,
{
    let t_len = ctx.num_steps();
    let d = ctx.values.nrows();
    let k = ctx.true_dists[0].len();
    let mut scores = Vec::with_capacity(t_len);
    let mut x = vec![0.0; d];
    let mut accum = vec![0.0f64; k];
    for t in 0..t_len {
        accum.fill(0.0);
        for l in 0..mc_samples {
            for f in 0..d {
                x[f] = ctx.values[[f, t]];
            }
            let words = [
                tag::OCCLUSION,
                ctx.sample_key,
                feature as u64,
                t as u64,
                l as u64,
            ];
            x[feature] = match reference {
                OcclusionReference::StandardNormal => keyed_normal(ctx.seed, &words),
                OcclusionReference::Bootstrap => {
                    let idx = stream(ctx.seed, &words).gen_range(0..t_len);
                    ctx.values[[feature, idx]]
                }
            };
            let dist = ctx.step_from(t, &x);
            for (a, p) in accum.iter_mut().zip(dist.probs()) {
                *a += p;
            }
        }
        let avg: Vec<f64> = accum.iter().map(|v| v / mc_samples as f64).collect();
        let partial = PredictiveDistribution::from_probs(avg)
            .expect("averaged distribution is a valid distribution");
        scores.push(kl_divergence(&ctx.true_dists[t], &partial));
    }
    scores
}
