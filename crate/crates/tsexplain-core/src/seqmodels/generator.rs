//! Recurrent conditional generator for counterfactual feature values.
//!
//! Given the observed history x_0..x_{t-1}, the generator emits an
//! independent Gaussian for each feature at step t: two head rows per
//! feature, one for the mean and one for the log-variance. Heads start at
//! zero, so an untrained generator proposes N(0, 1) everywhere.

use super::gru::{GruBackwardWork, GruCell, GruGrads, GruScratch, GruStepCache};
use super::linalg::{axpy, dot};
use super::optim::{clip_global_norm, Adam};
use super::{CounterfactualGenerator, EpochStats, ModelError, TrainConfig, TrainReport};
use crate::rng::{stream, tag};
use crate::seqdata::Dataset;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::time::Instant;

const LOGVAR_MIN: f64 = -10.0;
const LOGVAR_MAX: f64 = 10.0;

/// How the generator's conditionals are meant to be consumed.
///
/// Both modes share one architecture; the distinction is whether callers ask
/// for single-feature conditionals or the full joint (diagonal) distribution,
/// and it is recorded in checkpoints so tooling can pick the right file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorMode {
    PerFeature,
    JointDiagonal,
}

#[derive(Debug, Clone)]
pub struct GeneratorModel {
    pub(crate) cell: GruCell,
    /// Head weights, `2 * num_features x hidden`, row-major. Row `2d` is the
    /// mean of feature `d`, row `2d + 1` its log-variance.
    pub(crate) head_w: Vec<f64>,
    pub(crate) head_b: Vec<f64>,
    pub(crate) mode: GeneratorMode,
}

#[derive(Debug)]
pub struct GeneratorState {
    h: Vec<f64>,
    scratch: GruScratch,
}

impl Clone for GeneratorState {
    fn clone(&self) -> Self {
        GeneratorState {
            h: self.h.clone(),
            scratch: self.scratch.clone(),
        }
    }

    fn clone_from(&mut self, source: &Self) {
        self.h.clone_from(&source.h);
        self.scratch.clone_from(&source.scratch);
    }
}

impl GeneratorModel {
    pub(crate) fn new(num_features: usize, hidden: usize, seed: u64, mode: GeneratorMode) -> Self {
        let mut rng = stream(seed, &[tag::INIT, 1]);
        GeneratorModel {
            cell: GruCell::init(num_features, hidden, &mut rng),
            head_w: vec![0.0; 2 * num_features * hidden],
            head_b: vec![0.0; 2 * num_features],
            mode,
        }
    }

    pub fn mode(&self) -> GeneratorMode {
        self.mode
    }

    pub fn hidden(&self) -> usize {
        self.cell.hidden
    }

    pub(crate) fn tensors(&self) -> Vec<&Vec<f64>> {
        vec![
            &self.cell.wz, &self.cell.uz, &self.cell.bz,
            &self.cell.wr, &self.cell.ur, &self.cell.br,
            &self.cell.wh, &self.cell.uh, &self.cell.bh,
            &self.head_w, &self.head_b,
        ]
    }

    pub(crate) fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        vec![
            &mut self.cell.wz, &mut self.cell.uz, &mut self.cell.bz,
            &mut self.cell.wr, &mut self.cell.ur, &mut self.cell.br,
            &mut self.cell.wh, &mut self.cell.uh, &mut self.cell.bh,
            &mut self.head_w, &mut self.head_b,
        ]
    }

    pub(crate) fn tensor_dims(&self) -> Vec<Vec<usize>> {
        let d = self.cell.input_dim;
        let h = self.cell.hidden;
        vec![
            vec![h, d], vec![h, h], vec![h],
            vec![h, d], vec![h, h], vec![h],
            vec![h, d], vec![h, h], vec![h],
            vec![2 * d, h], vec![2 * d],
        ]
    }

    fn head(&self, h: &[f64], feature: usize) -> (f64, f64) {
        let hid = self.cell.hidden;
        let mu =
            self.head_b[2 * feature] + dot(&self.head_w[2 * feature * hid..(2 * feature + 1) * hid], h);
        let lv_raw = self.head_b[2 * feature + 1]
            + dot(&self.head_w[(2 * feature + 1) * hid..(2 * feature + 2) * hid], h);
        (mu, lv_raw)
    }

    /// Teacher-forced negative log-likelihood of one sample, mean over steps
    /// and sum over features, with gradients accumulated into `grads`.
    fn sample_nll_and_grads(
        &self,
        values: &Array2<f64>,
        weight: f64,
        grads: &mut GeneratorGrads,
        work: &mut GenWork,
    ) -> f64 {
        let steps = values.ncols();
        let d = self.cell.input_dim;
        let hid = self.cell.hidden;
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();

        work.caches.clear();
        work.head_inputs.clear();
        work.acts.clear();
        let mut h = vec![0.0; hid];
        let mut x = vec![0.0; d];
        let mut loss = 0.0;
        for t in 0..steps {
            work.head_inputs.push(h.clone());
            for f in 0..d {
                x[f] = values[[f, t]];
            }
            let mut step_acts = Vec::with_capacity(d);
            for f in 0..d {
                let (mu, lv_raw) = self.head(&h, f);
                let lv = lv_raw.clamp(LOGVAR_MIN, LOGVAR_MAX);
                let diff = x[f] - mu;
                loss += 0.5 * (ln_2pi + lv + diff * diff * (-lv).exp());
                step_acts.push((diff, lv_raw));
            }
            work.acts.push(step_acts);
            let cache = self.cell.step_cached(&mut h, &x, &mut work.scratch);
            work.caches.push(cache);
        }
        loss /= steps as f64;

        let scale = weight / steps as f64;
        let mut dh = vec![0.0; hid];
        let mut dh_prev = vec![0.0; hid];
        for t in (0..steps).rev() {
            self.cell
                .backward_step(&work.caches[t], &dh, &mut grads.cell, &mut dh_prev, &mut work.back);
            let hin = &work.head_inputs[t];
            for f in 0..d {
                let (diff, lv_raw) = work.acts[t][f];
                let lv = lv_raw.clamp(LOGVAR_MIN, LOGVAR_MAX);
                let e = (-lv).exp();
                let dmu = -diff * e * scale;
                let dlv = if (LOGVAR_MIN..=LOGVAR_MAX).contains(&lv_raw) {
                    0.5 * (1.0 - diff * diff * e) * scale
                } else {
                    0.0
                };
                grads.head_b[2 * f] += dmu;
                axpy(dmu, hin, &mut grads.head_w[2 * f * hid..(2 * f + 1) * hid]);
                grads.head_b[2 * f + 1] += dlv;
                axpy(dlv, hin, &mut grads.head_w[(2 * f + 1) * hid..(2 * f + 2) * hid]);
                axpy(dmu, &self.head_w[2 * f * hid..(2 * f + 1) * hid], &mut dh_prev);
                axpy(dlv, &self.head_w[(2 * f + 1) * hid..(2 * f + 2) * hid], &mut dh_prev);
            }
            std::mem::swap(&mut dh, &mut dh_prev);
        }
        loss
    }

    /// Teacher-forced mean NLL over a dataset, no gradients. Handy for
    /// checking a trained generator against held-out series.
    pub fn mean_nll(&self, data: &Dataset) -> f64 {
        let d = self.cell.input_dim;
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        let mut state = self.init_state();
        let mut x = vec![0.0; d];
        let mut total = 0.0;
        for sample in &data.samples {
            state.h.fill(0.0);
            let mut loss = 0.0;
            for t in 0..data.num_steps {
                for f in 0..d {
                    x[f] = sample.values[[f, t]];
                }
                for f in 0..d {
                    let (mu, lv_raw) = self.head(&state.h, f);
                    let lv = lv_raw.clamp(LOGVAR_MIN, LOGVAR_MAX);
                    let diff = x[f] - mu;
                    loss += 0.5 * (ln_2pi + lv + diff * diff * (-lv).exp());
                }
                self.cell.step(&mut state.h, &x, &mut state.scratch);
            }
            total += loss / data.num_steps as f64;
        }
        total / data.samples.len() as f64
    }
}

impl CounterfactualGenerator for GeneratorModel {
    type State = GeneratorState;

    fn num_features(&self) -> usize {
        self.cell.input_dim
    }

    fn init_state(&self) -> GeneratorState {
        GeneratorState {
            h: vec![0.0; self.cell.hidden],
            scratch: GruScratch::new(self.cell.hidden),
        }
    }

    fn advance(&self, state: &mut GeneratorState, x: &[f64]) {
        debug_assert_eq!(x.len(), self.cell.input_dim);
        self.cell.step(&mut state.h, x, &mut state.scratch);
    }

    fn next_dist(
        &self,
        state: &GeneratorState,
        features: &[usize],
        means: &mut [f64],
        stds: &mut [f64],
    ) {
        debug_assert_eq!(features.len(), means.len());
        debug_assert_eq!(features.len(), stds.len());
        for (i, &f) in features.iter().enumerate() {
            let (mu, lv_raw) = self.head(&state.h, f);
            let lv = lv_raw.clamp(LOGVAR_MIN, LOGVAR_MAX);
            means[i] = mu;
            stds[i] = (0.5 * lv).exp();
        }
    }
}

struct GeneratorGrads {
    cell: GruGrads,
    head_w: Vec<f64>,
    head_b: Vec<f64>,
}

impl GeneratorGrads {
    fn zeros(model: &GeneratorModel) -> Self {
        GeneratorGrads {
            cell: GruGrads::zeros(model.cell.input_dim, model.cell.hidden),
            head_w: vec![0.0; model.head_w.len()],
            head_b: vec![0.0; model.head_b.len()],
        }
    }

    fn reset(&mut self) {
        self.cell.reset();
        self.head_w.fill(0.0);
        self.head_b.fill(0.0);
    }

    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        vec![
            &mut self.cell.wz, &mut self.cell.uz, &mut self.cell.bz,
            &mut self.cell.wr, &mut self.cell.ur, &mut self.cell.br,
            &mut self.cell.wh, &mut self.cell.uh, &mut self.cell.bh,
            &mut self.head_w, &mut self.head_b,
        ]
    }
}

struct GenWork {
    scratch: GruScratch,
    back: GruBackwardWork,
    caches: Vec<GruStepCache>,
    head_inputs: Vec<Vec<f64>>,
    acts: Vec<Vec<(f64, f64)>>,
}

impl GenWork {
    fn new(hidden: usize) -> Self {
        GenWork {
            scratch: GruScratch::new(hidden),
            back: GruBackwardWork::new(hidden),
            caches: Vec::new(),
            head_inputs: Vec::new(),
            acts: Vec::new(),
        }
    }
}

/// Trains the generator by teacher forcing, early-stopping on train NLL.
pub fn train_generator(
    train: &Dataset,
    config: &TrainConfig,
    mode: GeneratorMode,
) -> Result<(GeneratorModel, TrainReport), ModelError> {
    config.validate()?;
    train
        .validate()
        .map_err(|e| ModelError::InvalidArgument(format!("train data: {e}")))?;

    let started = Instant::now();
    let mut model = GeneratorModel::new(train.num_features, config.hidden, config.seed, mode);
    let sizes: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
    let mut opt = Adam::new(config.learning_rate, &sizes);
    let mut grads = GeneratorGrads::zeros(&model);
    let mut work = GenWork::new(config.hidden);

    let n = train.samples.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut stats: Vec<EpochStats> = Vec::with_capacity(config.epochs);
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut best_params: Vec<Vec<f64>> = model.tensors().iter().map(|t| (*t).clone()).collect();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut stream(config.seed, &[tag::SHUFFLE, epoch as u64]));
        let mut epoch_loss = 0.0;
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            grads.reset();
            let weight = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                batch_loss += model.sample_nll_and_grads(
                    &train.samples[i].values,
                    weight,
                    &mut grads,
                    &mut work,
                ) * weight;
            }
            if !batch_loss.is_finite() {
                return Err(ModelError::Diverged {
                    epoch,
                    batch: batch_idx,
                });
            }
            epoch_loss += batch_loss * batch.len() as f64;
            {
                let mut g = grads.tensors_mut();
                let mut refs: Vec<&mut [f64]> = g.iter_mut().map(|t| t.as_mut_slice()).collect();
                clip_global_norm(&mut refs, config.grad_clip);
            }
            let g = grads.tensors_mut();
            let g_refs: Vec<&[f64]> = g.iter().map(|t| t.as_slice()).collect();
            let mut p = model.tensors_mut();
            let mut p_refs: Vec<&mut [f64]> = p.iter_mut().map(|t| t.as_mut_slice()).collect();
            opt.update(&mut p_refs, &g_refs);
        }
        epoch_loss /= n as f64;

        stats.push(EpochStats {
            epoch,
            train_loss: epoch_loss,
            valid_loss: None,
            valid_accuracy: None,
        });
        if epoch_loss < best_loss {
            best_loss = epoch_loss;
            best_epoch = epoch;
            for (dst, src) in best_params.iter_mut().zip(model.tensors()) {
                dst.copy_from_slice(src);
            }
        } else if epoch - best_epoch > config.patience {
            break;
        }
    }

    for (dst, src) in model.tensors_mut().into_iter().zip(&best_params) {
        dst.copy_from_slice(src);
    }
    let report = TrainReport {
        epochs: stats,
        best_epoch,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    Ok((model, report))
}

/// Samples a counterfactual window. Starting from `state` (the generator
/// having consumed steps `0..start` of the true series), rolls `len` steps
/// forward: features in `masked` are drawn from the generator's conditional,
/// the rest keep their observed values, and the generator advances on the
/// combined vector. Returns the combined `num_features x len` window.
pub fn generator_sample_window<G: CounterfactualGenerator, R: Rng + ?Sized>(
    generator: &G,
    state: &G::State,
    observed: &Array2<f64>,
    masked: &[usize],
    start: usize,
    len: usize,
    rng: &mut R,
) -> Result<Array2<f64>, ModelError> {
    let d = generator.num_features();
    if observed.nrows() != d {
        return Err(ModelError::InvalidArgument(format!(
            "observed series has {} rows, generator expects {d}",
            observed.nrows()
        )));
    }
    if start + len > observed.ncols() {
        return Err(ModelError::InvalidArgument(format!(
            "window {start}..{} exceeds series length {}",
            start + len,
            observed.ncols()
        )));
    }
    let mut seen = vec![false; d];
    for &f in masked {
        if f >= d {
            return Err(ModelError::InvalidArgument(format!(
                "masked feature {f} out of range for {d} features"
            )));
        }
        if seen[f] {
            return Err(ModelError::InvalidArgument(format!(
                "masked feature {f} listed twice"
            )));
        }
        seen[f] = true;
    }

    let mut state = state.clone();
    let mut window = Array2::zeros((d, len));
    let mut means = vec![0.0; masked.len()];
    let mut stds = vec![0.0; masked.len()];
    let mut x = vec![0.0; d];
    for u in 0..len {
        for f in 0..d {
            x[f] = observed[[f, start + u]];
        }
        generator.next_dist(&state, masked, &mut means, &mut stds);
        for (i, &f) in masked.iter().enumerate() {
            let z: f64 = StandardNormal.sample(rng);
            x[f] = means[i] + stds[i] * z;
        }
        for f in 0..d {
            window[[f, u]] = x[f];
        }
        generator.advance(&mut state, &x);
    }
    Ok(window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqdata::{narma_sequence, TimeSeriesSample};
    use std::collections::BTreeMap;

    fn dataset_from_values(values: Vec<Array2<f64>>) -> Dataset {
        let num_features = values[0].nrows();
        let num_steps = values[0].ncols();
        let samples = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| TimeSeriesSample {
                id: format!("g{i:03}"),
                values: v,
                labels: vec![0; num_steps],
                gt_importance: None,
            })
            .collect();
        Dataset {
            num_features,
            num_steps,
            num_classes: 2,
            metadata: BTreeMap::new(),
            samples,
        }
    }

    #[test]
    fn fresh_generator_proposes_standard_normal() {
        let model = GeneratorModel::new(3, 8, 5, GeneratorMode::PerFeature);
        let mut state = model.init_state();
        model.advance(&mut state, &[1.0, -2.0, 0.5]);
        model.advance(&mut state, &[0.0, 3.0, -1.0]);
        let mut means = vec![9.0; 3];
        let mut stds = vec![9.0; 3];
        model.next_dist(&state, &[0, 1, 2], &mut means, &mut stds);
        for i in 0..3 {
            assert_eq!(means[i], 0.0);
            assert_eq!(stds[i], 1.0);
        }
    }

    #[test]
    fn analytic_gradients_match_central_differences() {
        let mut model = GeneratorModel::new(2, 3, 13, GeneratorMode::JointDiagonal);
        let mut rng = stream(77, &[tag::INIT, 9]);
        for w in model.head_w.iter_mut().chain(model.head_b.iter_mut()) {
            *w = rng.gen_range(-0.5..0.5);
        }
        let values = Array2::from_shape_fn((2, 4), |(d, t)| {
            0.4 * (d as f64 - 0.5) + 0.2 * t as f64
        });

        let mut grads = GeneratorGrads::zeros(&model);
        let mut work = GenWork::new(3);
        model.sample_nll_and_grads(&values, 1.0, &mut grads, &mut work);
        let analytic: Vec<Vec<f64>> =
            grads.tensors_mut().into_iter().map(|t| t.clone()).collect();

        let data = dataset_from_values(vec![values.clone()]);
        let eps = 1e-4;
        let mut checked = 0;
        for k in 0..analytic.len() {
            for i in 0..analytic[k].len() {
                let orig = model.tensors()[k][i];
                model.tensors_mut()[k][i] = orig + eps;
                let up = model.mean_nll(&data);
                model.tensors_mut()[k][i] = orig - eps;
                let down = model.mean_nll(&data);
                model.tensors_mut()[k][i] = orig;
                let numeric = (up - down) / (2.0 * eps);
                let a = analytic[k][i];
                let tol = 1e-5 + 1e-3 * a.abs().max(numeric.abs());
                assert!(
                    (a - numeric).abs() <= tol,
                    "tensor {k} index {i}: analytic {a} numeric {numeric}"
                );
                checked += 1;
            }
        }
        assert_eq!(checked, 70);
    }

    use crate::rng::{stream, tag};
    use rand::Rng;

    #[test]
    fn learns_constant_features_with_tight_variance() {
        let consts = [0.5, -0.3];
        let values: Vec<Array2<f64>> = (0..20)
            .map(|_| Array2::from_shape_fn((2, 10), |(d, _)| consts[d]))
            .collect();
        let data = dataset_from_values(values);
        let config = TrainConfig {
            hidden: 16,
            epochs: 200,
            batch_size: 10,
            learning_rate: 0.01,
            grad_clip: 5.0,
            patience: 200,
            seed: 4,
        };
        let (model, _) = train_generator(&data, &config, GeneratorMode::PerFeature).unwrap();

        // Conditionals anywhere along the sequence should sit on the constant
        // with a small spread.
        let mut state = model.init_state();
        let mut means = vec![0.0; 2];
        let mut stds = vec![0.0; 2];
        for _ in 0..3 {
            model.advance(&mut state, &consts);
        }
        model.next_dist(&state, &[0, 1], &mut means, &mut stds);
        for d in 0..2 {
            assert!(
                (means[d] - consts[d]).abs() < 0.05,
                "mean[{d}] = {}",
                means[d]
            );
            assert!(stds[d] < 0.1, "std[{d}] = {}", stds[d]);
        }

        // Draws should respect the fitted spread: nearly all within three
        // standard deviations of the mean.
        let observed = Array2::from_shape_fn((2, 10), |(d, _)| consts[d]);
        let mut rng = stream(9, &[tag::WINDOW]);
        let mut inside = 0usize;
        let mut total = 0usize;
        for _ in 0..200 {
            let w =
                generator_sample_window(&model, &model.init_state(), &observed, &[0, 1], 0, 5, &mut rng)
                    .unwrap();
            let mut state = model.init_state();
            for u in 0..5 {
                model.next_dist(&state, &[0, 1], &mut means, &mut stds);
                for d in 0..2 {
                    if (w[[d, u]] - means[d]).abs() <= 3.0 * stds[d] {
                        inside += 1;
                    }
                    total += 1;
                }
                let x = [w[[0, u]], w[[1, u]]];
                model.advance(&mut state, &x);
            }
        }
        assert!(
            inside as f64 / total as f64 >= 0.99,
            "{inside}/{total} draws within three sigma"
        );
    }

    #[test]
    fn beats_unconditional_gaussian_on_autoregressive_data() {
        let mut values = Vec::new();
        for i in 0..40 {
            let a = narma_sequence(10, 30, &mut stream(50, &[tag::NARMA, i, 0])).unwrap();
            let b = narma_sequence(10, 30, &mut stream(50, &[tag::NARMA, i, 1])).unwrap();
            let mut v = Array2::zeros((2, 30));
            for t in 0..30 {
                v[[0, t]] = a[t];
                v[[1, t]] = b[t];
            }
            values.push(v);
        }
        let data = dataset_from_values(values);

        // Baseline: one unconditional Gaussian per feature.
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        let mut baseline = 0.0;
        for d in 0..2 {
            let xs: Vec<f64> = data
                .samples
                .iter()
                .flat_map(|s| (0..30).map(move |t| s.values[[d, t]]))
                .collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
            baseline += 0.5 * (ln_2pi + var.ln() + 1.0);
        }

        let config = TrainConfig {
            hidden: 16,
            epochs: 80,
            batch_size: 8,
            learning_rate: 5e-3,
            grad_clip: 5.0,
            patience: 80,
            seed: 6,
        };
        let (model, _) = train_generator(&data, &config, GeneratorMode::PerFeature).unwrap();
        let nll = model.mean_nll(&data);
        assert!(
            nll < baseline,
            "conditional NLL {nll} should beat unconditional {baseline}"
        );
    }

    #[test]
    fn reports_divergence_with_location() {
        let values: Vec<Array2<f64>> = (0..8)
            .map(|i| Array2::from_elem((2, 6), 0.1 * (i + 1) as f64))
            .collect();
        let data = dataset_from_values(values);
        let config = TrainConfig {
            hidden: 4,
            epochs: 3,
            batch_size: 4,
            learning_rate: 1e200,
            grad_clip: 1e300,
            patience: 3,
            seed: 1,
        };
        let err = train_generator(&data, &config, GeneratorMode::PerFeature).unwrap_err();
        match err {
            ModelError::Diverged { epoch, batch } => {
                assert_eq!(epoch, 1);
                assert!(batch >= 1);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn sample_window_respects_observed_features() {
        let model = GeneratorModel::new(3, 8, 21, GeneratorMode::PerFeature);
        let observed = Array2::from_shape_fn((3, 12), |(d, t)| d as f64 + 0.1 * t as f64);
        let state = model.init_state();
        let w1 =
            generator_sample_window(&model, &state, &observed, &[1], 4, 6, &mut stream(1, &[7]))
                .unwrap();
        let w2 =
            generator_sample_window(&model, &state, &observed, &[1], 4, 6, &mut stream(1, &[7]))
                .unwrap();
        assert_eq!(w1, w2);
        for u in 0..6 {
            assert_eq!(w1[[0, u]], observed[[0, 4 + u]]);
            assert_eq!(w1[[2, u]], observed[[2, 4 + u]]);
        }

        let err = generator_sample_window(&model, &state, &observed, &[3], 0, 2, &mut stream(1, &[7]))
            .unwrap_err();
        assert!(matches!(err, ModelError::InvalidArgument(_)));
        let err = generator_sample_window(&model, &state, &observed, &[0, 0], 0, 2, &mut stream(1, &[7]))
            .unwrap_err();
        assert!(matches!(err, ModelError::InvalidArgument(_)));
        let err = generator_sample_window(&model, &state, &observed, &[0], 10, 6, &mut stream(1, &[7]))
            .unwrap_err();
        assert!(matches!(err, ModelError::InvalidArgument(_)));
    }
}
