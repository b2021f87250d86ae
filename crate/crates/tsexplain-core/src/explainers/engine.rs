//! Shared per-sample machinery: cached model states along the true history
//! and Monte Carlo rollouts over counterfactual windows.

use super::{ExplainError, FeatureSet};
use crate::rng::stream;
use crate::seqmodels::{CounterfactualGenerator, PredictiveDistribution, SequencePredictor};
use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// One standard normal draw from a derived stream. Keying draws by their
/// full coordinates makes scores independent of evaluation order and lets
/// overlapping windows reuse the same noise.
pub(crate) fn keyed_normal(seed: u64, words: &[u64]) -> f64 {
    StandardNormal.sample(&mut stream(seed, words))
}

/// Caches for explaining one sample: model states after every true-history
/// prefix, plus the predictor's actual distribution at every step.
pub(crate) struct SampleContext<'a, P: SequencePredictor, G: CounterfactualGenerator> {
    pub predictor: &'a P,
    pub generator: &'a G,
    pub values: &'a Array2<f64>,
    /// `true_dists[t]` is p(y | x_0..x_t).
    pub true_dists: Vec<PredictiveDistribution>,
    /// `pred_states[s]` has consumed x_0..x_{s-1}; index 0 is the initial state.
    pred_states: Vec<P::State>,
    /// Same prefix convention for the generator, whose `next_dist` at index s
    /// is the conditional for step s.
    gen_states: Vec<G::State>,
    pub seed: u64,
    pub sample_key: u64,
}

impl<'a, P: SequencePredictor, G: CounterfactualGenerator> SampleContext<'a, P, G> {
    pub fn new(
        predictor: &'a P,
        generator: &'a G,
        values: &'a Array2<f64>,
        seed: u64,
        sample_key: u64,
    ) -> Result<Self, ExplainError> {
        let (d, t_len) = values.dim();
        if d != predictor.num_features() {
            return Err(ExplainError::InvalidArgument(format!(
                "series has {d} features, predictor expects {}",
                predictor.num_features()
            )));
        }
        if d != generator.num_features() {
            return Err(ExplainError::InvalidArgument(format!(
                "series has {d} features, generator expects {}",
                generator.num_features()
            )));
        }
        if t_len == 0 {
            return Err(ExplainError::InvalidArgument("series has no steps".into()));
        }

        let mut pred_states = Vec::with_capacity(t_len);
        let mut gen_states = Vec::with_capacity(t_len);
        let mut true_dists = Vec::with_capacity(t_len);
        let mut ps = predictor.init_state();
        let mut gs = generator.init_state();
        let mut x = vec![0.0; d];
        for t in 0..t_len {
            pred_states.push(ps.clone());
            gen_states.push(gs.clone());
            for f in 0..d {
                x[f] = values[[f, t]];
            }
            true_dists.push(predictor.step(&mut ps, &x));
            generator.advance(&mut gs, &x);
        }
        Ok(SampleContext {
            predictor,
            generator,
            values,
            true_dists,
            pred_states,
            gen_states,
            seed,
            sample_key,
        })
    }

    pub fn num_steps(&self) -> usize {
        self.values.ncols()
    }

    /// Average predictive distribution at steps `start..start+len` when the
    /// `masked` features are replaced by generator draws from step `start`
    /// onward (conditioned on the true history before it). One entry per
    /// window offset.
    pub fn window_dists(
        &self,
        masked: &[usize],
        start: usize,
        len: usize,
        mc_samples: usize,
        kind: u64,
    ) -> Vec<PredictiveDistribution> {
        debug_assert!(start + len <= self.num_steps());
        debug_assert!(len >= 1 && mc_samples >= 1);
        let d = self.values.nrows();
        let k = self.true_dists[0].len();
        let mut accum = vec![vec![0.0f64; k]; len];
        let mut means = vec![0.0; masked.len()];
        let mut stds = vec![0.0; masked.len()];
        let mut x = vec![0.0; d];
        let mut ps = self.pred_states[start].clone();
        let mut gs = self.gen_states[start].clone();
        for l in 0..mc_samples {
            ps.clone_from(&self.pred_states[start]);
            gs.clone_from(&self.gen_states[start]);
            for u in 0..len {
                let t = start + u;
                for f in 0..d {
                    x[f] = self.values[[f, t]];
                }
                self.generator.next_dist(&gs, masked, &mut means, &mut stds);
                for (i, &f) in masked.iter().enumerate() {
                    let z = keyed_normal(
                        self.seed,
                        &[kind, self.sample_key, f as u64, t as u64, l as u64],
                    );
                    x[f] = means[i] + stds[i] * z;
                }
                let dist = self.predictor.step(&mut ps, &x);
                for (a, p) in accum[u].iter_mut().zip(dist.probs()) {
                    *a += p;
                }
                if u + 1 < len {
                    self.generator.advance(&mut gs, &x);
                }
            }
        }
        accum
            .into_iter()
            .map(|mut row| {
                for v in row.iter_mut() {
                    *v /= mc_samples as f64;
                }
                PredictiveDistribution::from_probs(row)
                    .expect("averaged distribution is a valid distribution")
            })
            .collect()
    }

    /// Prediction at step `t` for an arbitrary replacement of x_t, from the
    /// cached prefix state.
    pub fn step_from(&self, t: usize, x: &[f64]) -> PredictiveDistribution {
        debug_assert!(t < self.num_steps());
        let mut ps = self.pred_states[t].clone();
        self.predictor.step(&mut ps, x)
    }

    /// Average predictive distribution at step `t` when the `sampled`
    /// features of x_t are drawn from the generator's conditional and the
    /// rest stay observed. Each draw replays the predictor over the full
    /// true prefix x_0..x_{t-1} before consuming the modified step.
    pub fn prefix_replay_dist(
        &self,
        sampled: &[usize],
        t: usize,
        mc_samples: usize,
        kind: u64,
    ) -> PredictiveDistribution {
        debug_assert!(t < self.num_steps());
        let d = self.values.nrows();
        let k = self.true_dists[0].len();
        let mut means = vec![0.0; sampled.len()];
        let mut stds = vec![0.0; sampled.len()];
        self.generator
            .next_dist(&self.gen_states[t], sampled, &mut means, &mut stds);

        let mut accum = vec![0.0f64; k];
        let mut x = vec![0.0; d];
        let init = self.predictor.init_state();
        let mut ps = init.clone();
        for l in 0..mc_samples {
            ps.clone_from(&init);
            for u in 0..t {
                for f in 0..d {
                    x[f] = self.values[[f, u]];
                }
                let _ = self.predictor.step(&mut ps, &x);
            }
            for f in 0..d {
                x[f] = self.values[[f, t]];
            }
            for (i, &f) in sampled.iter().enumerate() {
                let z = keyed_normal(
                    self.seed,
                    &[kind, self.sample_key, f as u64, t as u64, l as u64],
                );
                x[f] = means[i] + stds[i] * z;
            }
            let dist = self.predictor.step(&mut ps, &x);
            for (a, p) in accum.iter_mut().zip(dist.probs()) {
                *a += p;
            }
        }
        for v in accum.iter_mut() {
            *v /= mc_samples as f64;
        }
        PredictiveDistribution::from_probs(accum)
            .expect("averaged distribution is a valid distribution")
    }
}

/// Expected prediction at `step` when only the `observed` features keep
/// their true values and the rest of x_step is drawn from the generator's
/// conditional given the true history, averaged over `mc_samples` draws.
///
/// This is the partial expectation FIT and IFIT are built from, exposed with
/// a caller-supplied noise source.
pub fn partial_prediction<P, G, R>(
    predictor: &P,
    generator: &G,
    values: &Array2<f64>,
    step: usize,
    observed: &FeatureSet,
    mc_samples: usize,
    rng: &mut R,
) -> Result<PredictiveDistribution, ExplainError>
where
    P: SequencePredictor,
    G: CounterfactualGenerator,
    R: Rng + ?Sized,
{
    let (d, t_len) = values.dim();
    if step >= t_len {
        return Err(ExplainError::StepOutOfRange {
            step,
            num_steps: t_len,
        });
    }
    if observed.num_features() != d {
        return Err(ExplainError::InvalidArgument(format!(
            "feature set is over {} features, series has {d}",
            observed.num_features()
        )));
    }
    if mc_samples == 0 {
        return Err(ExplainError::InvalidArgument(
            "mc_samples must be positive".into(),
        ));
    }
    let ctx = SampleContext::new(predictor, generator, values, 0, 0)?;
    let sampled = observed.complement();
    if sampled.is_empty() {
        return Ok(ctx.true_dists[step].clone());
    }

    let k = ctx.true_dists[0].len();
    let mut means = vec![0.0; sampled.len()];
    let mut stds = vec![0.0; sampled.len()];
    generator.next_dist(&ctx.gen_states[step], sampled.indices(), &mut means, &mut stds);
    let mut accum = vec![0.0f64; k];
    let mut x = vec![0.0; d];
    let mut ps = ctx.pred_states[step].clone();
    for _ in 0..mc_samples {
        ps.clone_from(&ctx.pred_states[step]);
        for f in 0..d {
            x[f] = values[[f, step]];
        }
        for (i, &f) in sampled.indices().iter().enumerate() {
            let z: f64 = StandardNormal.sample(rng);
            x[f] = means[i] + stds[i] * z;
        }
        let dist = predictor.step(&mut ps, &x);
        for (a, p) in accum.iter_mut().zip(dist.probs()) {
            *a += p;
        }
    }
    for v in accum.iter_mut() {
        *v /= mc_samples as f64;
    }
    Ok(PredictiveDistribution::from_probs(accum)
        .expect("averaged distribution is a valid distribution"))
}

/// Small untrained-but-nondegenerate models for explainer tests: random
/// readout and head weights so distributions actually depend on the input.
#[cfg(test)]
pub(crate) mod testkit {
    use crate::rng::{stream, tag};
    use crate::seqmodels::{GeneratorMode, GeneratorModel, PredictorModel};
    use ndarray::Array2;
    use rand::Rng;

    pub(crate) fn toy_models(d: usize, hidden: usize) -> (PredictorModel, GeneratorModel) {
        let mut predictor = PredictorModel::new(d, 2, hidden, 101);
        let mut rng = stream(101, &[tag::INIT, 8]);
        {
            let mut tensors = predictor.tensors_mut();
            let n = tensors.len();
            for t in &mut tensors[n - 2..] {
                for v in t.iter_mut() {
                    *v = rng.gen_range(-0.8..0.8);
                }
            }
        }
        let mut generator = GeneratorModel::new(d, hidden, 102, GeneratorMode::PerFeature);
        {
            let mut tensors = generator.tensors_mut();
            let n = tensors.len();
            for t in &mut tensors[n - 2..] {
                for v in t.iter_mut() {
                    *v = rng.gen_range(-0.3..0.3);
                }
            }
        }
        (predictor, generator)
    }

    pub(crate) fn toy_series(d: usize, t_len: usize) -> Array2<f64> {
        let mut rng = stream(103, &[tag::NARMA, 77]);
        Array2::from_shape_fn((d, t_len), |_| rng.gen_range(-1.0..1.0))
    }
}
