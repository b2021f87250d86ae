//! Sequence classifier: recurrent trunk with a linear softmax readout.
//!
//! The readout starts at zero so an untrained model emits the uniform
//! distribution at every step.

use super::gru::{GruBackwardWork, GruCell, GruGrads, GruScratch, GruStepCache};
use super::optim::{clip_global_norm, Adam};
use super::{
    EpochStats, ModelError, PredictiveDistribution, SequencePredictor, TrainConfig, TrainReport,
};
use crate::rng::{stream, tag};
use crate::seqdata::{Dataset, TimeSeriesSample};
use ndarray::Array2;
use rand::seq::SliceRandom;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct PredictorModel {
    pub(crate) cell: GruCell,
    /// Readout weights, `num_classes x hidden`, row-major.
    pub(crate) readout_w: Vec<f64>,
    pub(crate) readout_b: Vec<f64>,
    pub(crate) num_classes: usize,
}

#[derive(Debug)]
pub struct PredictorState {
    h: Vec<f64>,
    scratch: GruScratch,
}

impl Clone for PredictorState {
    fn clone(&self) -> Self {
        PredictorState {
            h: self.h.clone(),
            scratch: self.scratch.clone(),
        }
    }

    fn clone_from(&mut self, source: &Self) {
        self.h.clone_from(&source.h);
        self.scratch.clone_from(&source.scratch);
    }
}

impl PredictorModel {
    pub(crate) fn new(num_features: usize, num_classes: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = stream(seed, &[tag::INIT, 0]);
        PredictorModel {
            cell: GruCell::init(num_features, hidden, &mut rng),
            readout_w: vec![0.0; num_classes * hidden],
            readout_b: vec![0.0; num_classes],
            num_classes,
        }
    }

    pub fn hidden(&self) -> usize {
        self.cell.hidden
    }

    /// Parameter tensors in checkpoint order.
    pub(crate) fn tensors(&self) -> Vec<&Vec<f64>> {
        vec![
            &self.cell.wz, &self.cell.uz, &self.cell.bz,
            &self.cell.wr, &self.cell.ur, &self.cell.br,
            &self.cell.wh, &self.cell.uh, &self.cell.bh,
            &self.readout_w, &self.readout_b,
        ]
    }

    pub(crate) fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        vec![
            &mut self.cell.wz, &mut self.cell.uz, &mut self.cell.bz,
            &mut self.cell.wr, &mut self.cell.ur, &mut self.cell.br,
            &mut self.cell.wh, &mut self.cell.uh, &mut self.cell.bh,
            &mut self.readout_w, &mut self.readout_b,
        ]
    }

    pub(crate) fn tensor_dims(&self) -> Vec<Vec<usize>> {
        let d = self.cell.input_dim;
        let h = self.cell.hidden;
        let k = self.num_classes;
        vec![
            vec![h, d], vec![h, h], vec![h],
            vec![h, d], vec![h, h], vec![h],
            vec![h, d], vec![h, h], vec![h],
            vec![k, h], vec![k],
        ]
    }

    fn logits_into(&self, h: &[f64], out: &mut [f64]) {
        let hid = self.cell.hidden;
        for k in 0..self.num_classes {
            out[k] = self.readout_b[k]
                + super::linalg::dot(&self.readout_w[k * hid..(k + 1) * hid], h);
        }
    }

    /// Mean per-step cross-entropy of one sample, with gradients accumulated
    /// into `grads` (scaled by `weight`).
    fn sample_loss_and_grads(
        &self,
        values: &Array2<f64>,
        labels: &[u32],
        weight: f64,
        grads: &mut PredictorGrads,
        work: &mut TrainWork,
    ) -> f64 {
        let steps = values.ncols();
        let d = self.cell.input_dim;
        let hid = self.cell.hidden;
        let k = self.num_classes;

        work.caches.clear();
        work.hs.clear();
        work.probs.clear();
        let mut h = vec![0.0; hid];
        let mut x = vec![0.0; d];
        let mut logits = vec![0.0; k];
        let mut loss = 0.0;
        for t in 0..steps {
            for f in 0..d {
                x[f] = values[[f, t]];
            }
            let cache = self.cell.step_cached(&mut h, &x, &mut work.scratch);
            work.caches.push(cache);
            work.hs.push(h.clone());
            self.logits_into(&h, &mut logits);
            let (step_loss, probs) = log_softmax_loss(&logits, labels[t] as usize);
            loss += step_loss;
            work.probs.push(probs);
        }
        loss /= steps as f64;

        let scale = weight / steps as f64;
        let mut dh = vec![0.0; hid];
        let mut dh_prev = vec![0.0; hid];
        let mut dlogits = vec![0.0; k];
        for t in (0..steps).rev() {
            for c in 0..k {
                dlogits[c] = work.probs[t][c] * scale;
            }
            dlogits[labels[t] as usize] -= scale;
            let ht = &work.hs[t];
            for c in 0..k {
                super::linalg::axpy(dlogits[c], ht, &mut grads.w[c * hid..(c + 1) * hid]);
                grads.b[c] += dlogits[c];
                super::linalg::axpy(dlogits[c], &self.readout_w[c * hid..(c + 1) * hid], &mut dh);
            }
            self.cell
                .backward_step(&work.caches[t], &dh, &mut grads.cell, &mut dh_prev, &mut work.back);
            std::mem::swap(&mut dh, &mut dh_prev);
        }
        loss
    }

    /// Mean per-step cross-entropy over a dataset, no gradients.
    fn mean_loss(&self, data: &Dataset) -> f64 {
        let mut state = self.init_state();
        let d = self.cell.input_dim;
        let mut x = vec![0.0; d];
        let mut logits = vec![0.0; self.num_classes];
        let mut total = 0.0;
        for sample in &data.samples {
            state.h.fill(0.0);
            let mut loss = 0.0;
            for t in 0..data.num_steps {
                for f in 0..d {
                    x[f] = sample.values[[f, t]];
                }
                self.cell.step(&mut state.h, &x, &mut state.scratch);
                self.logits_into(&state.h, &mut logits);
                loss += log_softmax_loss(&logits, sample.labels[t] as usize).0;
            }
            total += loss / data.num_steps as f64;
        }
        total / data.samples.len() as f64
    }

    /// Fraction of (sample, step) cells where the argmax class matches the
    /// label.
    pub(crate) fn step_accuracy(&self, data: &Dataset) -> f64 {
        let mut state = self.init_state();
        let d = self.cell.input_dim;
        let mut x = vec![0.0; d];
        let mut logits = vec![0.0; self.num_classes];
        let mut hits = 0usize;
        for sample in &data.samples {
            state.h.fill(0.0);
            for t in 0..data.num_steps {
                for f in 0..d {
                    x[f] = sample.values[[f, t]];
                }
                self.cell.step(&mut state.h, &x, &mut state.scratch);
                self.logits_into(&state.h, &mut logits);
                let pred = argmax(&logits);
                if pred == sample.labels[t] as usize {
                    hits += 1;
                }
            }
        }
        hits as f64 / (data.samples.len() * data.num_steps) as f64
    }
}

impl SequencePredictor for PredictorModel {
    type State = PredictorState;

    fn num_features(&self) -> usize {
        self.cell.input_dim
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn init_state(&self) -> PredictorState {
        PredictorState {
            h: vec![0.0; self.cell.hidden],
            scratch: GruScratch::new(self.cell.hidden),
        }
    }

    fn step(&self, state: &mut PredictorState, x: &[f64]) -> PredictiveDistribution {
        debug_assert_eq!(x.len(), self.cell.input_dim);
        self.cell.step(&mut state.h, x, &mut state.scratch);
        let mut logits = vec![0.0; self.num_classes];
        self.logits_into(&state.h, &mut logits);
        PredictiveDistribution::from_logits(&logits)
    }
}

struct PredictorGrads {
    cell: GruGrads,
    w: Vec<f64>,
    b: Vec<f64>,
}

impl PredictorGrads {
    fn zeros(model: &PredictorModel) -> Self {
        PredictorGrads {
            cell: GruGrads::zeros(model.cell.input_dim, model.cell.hidden),
            w: vec![0.0; model.readout_w.len()],
            b: vec![0.0; model.readout_b.len()],
        }
    }

    fn reset(&mut self) {
        self.cell.reset();
        self.w.fill(0.0);
        self.b.fill(0.0);
    }

    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        vec![
            &mut self.cell.wz, &mut self.cell.uz, &mut self.cell.bz,
            &mut self.cell.wr, &mut self.cell.ur, &mut self.cell.br,
            &mut self.cell.wh, &mut self.cell.uh, &mut self.cell.bh,
            &mut self.w, &mut self.b,
        ]
    }
}

struct TrainWork {
    scratch: GruScratch,
    back: GruBackwardWork,
    caches: Vec<GruStepCache>,
    hs: Vec<Vec<f64>>,
    probs: Vec<Vec<f64>>,
}

impl TrainWork {
    fn new(hidden: usize) -> Self {
        TrainWork {
            scratch: GruScratch::new(hidden),
            back: GruBackwardWork::new(hidden),
            caches: Vec::new(),
            hs: Vec::new(),
            probs: Vec::new(),
        }
    }
}

/// Stable cross-entropy: returns `-ln softmax(logits)[label]` and the softmax
/// probabilities.
fn log_softmax_loss(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    let mut probs = vec![0.0; logits.len()];
    for (i, &l) in logits.iter().enumerate() {
        let e = (l - m).exp();
        probs[i] = e;
        sum += e;
    }
    for p in probs.iter_mut() {
        *p /= sum;
    }
    let loss = m + sum.ln() - logits[label];
    (loss, probs)
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Trains a step-wise classifier on `train`, early-stopping on validation
/// loss when `valid` is given (train loss otherwise). Accuracy saturates long
/// before the probabilities settle, so the loss is the stopping metric; the
/// returned model carries the best-epoch parameters.
pub fn train_predictor(
    train: &Dataset,
    valid: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<(PredictorModel, TrainReport), ModelError> {
    config.validate()?;
    train
        .validate()
        .map_err(|e| ModelError::InvalidArgument(format!("train data: {e}")))?;
    if let Some(v) = valid {
        v.validate()
            .map_err(|e| ModelError::InvalidArgument(format!("valid data: {e}")))?;
        if v.num_features != train.num_features || v.num_classes != train.num_classes {
            return Err(ModelError::InvalidArgument(
                "valid data shape does not match train data".into(),
            ));
        }
    }
    if train.num_classes < 2 {
        return Err(ModelError::InvalidArgument(
            "need at least two classes".into(),
        ));
    }

    let started = Instant::now();
    let mut model = PredictorModel::new(
        train.num_features,
        train.num_classes,
        config.hidden,
        config.seed,
    );
    let sizes: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
    let mut opt = Adam::new(config.learning_rate, &sizes);
    let mut grads = PredictorGrads::zeros(&model);
    let mut work = TrainWork::new(config.hidden);

    let n = train.samples.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut stats: Vec<EpochStats> = Vec::with_capacity(config.epochs);
    let mut best_metric = f64::NEG_INFINITY;
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
                let s: &TimeSeriesSample = &train.samples[i];
                batch_loss +=
                    model.sample_loss_and_grads(&s.values, &s.labels, weight, &mut grads, &mut work)
                        * weight;
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
                let mut refs: Vec<&mut [f64]> =
                    g.iter_mut().map(|t| t.as_mut_slice()).collect();
                clip_global_norm(&mut refs, config.grad_clip);
            }
            let g = grads.tensors_mut();
            let g_refs: Vec<&[f64]> = g.iter().map(|t| t.as_slice()).collect();
            let mut p = model.tensors_mut();
            let mut p_refs: Vec<&mut [f64]> = p.iter_mut().map(|t| t.as_mut_slice()).collect();
            opt.update(&mut p_refs, &g_refs);
        }
        epoch_loss /= n as f64;

        let (valid_loss, valid_accuracy) = match valid {
            Some(v) => (Some(model.mean_loss(v)), Some(model.step_accuracy(v))),
            None => (None, None),
        };
        let metric = valid_loss.map(|l| -l).unwrap_or(-epoch_loss);
        stats.push(EpochStats {
            epoch,
            train_loss: epoch_loss,
            valid_loss,
            valid_accuracy,
        });
        if metric > best_metric {
            best_metric = metric;
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqdata::{make_spike_dataset, SpikeConfig};
    use ndarray::Array2;
    use std::collections::BTreeMap;

    #[test]
    fn fresh_model_is_uniform() {
        let model = PredictorModel::new(3, 4, 8, 7);
        let mut state = model.init_state();
        for t in 0..5 {
            let dist = model.step(&mut state, &[0.3 * t as f64, -1.0, 2.5]);
            for &p in dist.probs() {
                assert!((p - 0.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn analytic_gradients_match_central_differences() {
        let mut model = PredictorModel::new(2, 2, 3, 11);
        // A zero readout has zero gradient almost everywhere; give it signal.
        let mut rng = stream(99, &[tag::INIT, 9]);
        for w in model.readout_w.iter_mut().chain(model.readout_b.iter_mut()) {
            *w = rng.gen_range(-0.5..0.5);
        }
        let values = Array2::from_shape_fn((2, 4), |(d, t)| {
            0.3 * (d as f64 + 1.0) * ((t as f64) - 1.5)
        });
        let labels = [0u32, 1, 1, 0];

        let mut grads = PredictorGrads::zeros(&model);
        let mut work = TrainWork::new(3);
        model.sample_loss_and_grads(&values, &labels, 1.0, &mut grads, &mut work);
        let analytic: Vec<Vec<f64>> = grads
            .tensors_mut()
            .into_iter()
            .map(|t| t.clone())
            .collect();

        let eps = 1e-4;
        let mut checked = 0;
        for k in 0..analytic.len() {
            for i in 0..analytic[k].len() {
                let orig = model.tensors()[k][i];
                model.tensors_mut()[k][i] = orig + eps;
                let mut g = PredictorGrads::zeros(&model);
                let up = model.sample_loss_and_grads(&values, &labels, 1.0, &mut g, &mut work);
                model.tensors_mut()[k][i] = orig - eps;
                let mut g = PredictorGrads::zeros(&model);
                let down = model.sample_loss_and_grads(&values, &labels, 1.0, &mut g, &mut work);
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
        assert_eq!(checked, 62);
    }

    use rand::Rng;
    use crate::rng::{stream, tag};

    fn one_sample_dataset() -> Dataset {
        let values = Array2::from_shape_fn((2, 6), |(d, t)| {
            if t >= 2 {
                1.0 + d as f64
            } else {
                -0.5
            }
        });
        Dataset {
            num_features: 2,
            num_steps: 6,
            num_classes: 2,
            metadata: BTreeMap::new(),
            samples: vec![TimeSeriesSample {
                id: "only".into(),
                values,
                labels: vec![0, 0, 1, 1, 1, 1],
                gt_importance: None,
            }],
        }
    }

    #[test]
    fn overfits_a_single_sample() {
        let data = one_sample_dataset();
        let config = TrainConfig {
            hidden: 16,
            epochs: 300,
            batch_size: 1,
            learning_rate: 0.01,
            grad_clip: 5.0,
            patience: 300,
            seed: 3,
        };
        let (model, report) = train_predictor(&data, None, &config).unwrap();
        let final_loss = model.mean_loss(&data);
        assert!(
            final_loss < 0.05,
            "loss {final_loss} after {} epochs",
            report.epochs.len()
        );
        assert!((model.step_accuracy(&data) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn training_is_deterministic() {
        let mut cfg = SpikeConfig::spike(12, 5);
        cfg.num_steps = 20;
        let data = make_spike_dataset(&cfg).unwrap();
        let train_cfg = TrainConfig {
            hidden: 8,
            epochs: 2,
            batch_size: 4,
            learning_rate: 1e-3,
            grad_clip: 5.0,
            patience: 5,
            seed: 42,
        };
        let (a, ra) = train_predictor(&data, Some(&data), &train_cfg).unwrap();
        let (b, rb) = train_predictor(&data, Some(&data), &train_cfg).unwrap();
        for (ta, tb) in a.tensors().iter().zip(b.tensors().iter()) {
            let bits_a: Vec<u64> = ta.iter().map(|v| v.to_bits()).collect();
            let bits_b: Vec<u64> = tb.iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits_a, bits_b);
        }
        assert_eq!(ra.best_epoch, rb.best_epoch);
        assert_eq!(ra.epochs.len(), rb.epochs.len());
    }

    #[test]
    fn rejects_mismatched_validation_shape() {
        let data = one_sample_dataset();
        let mut other = one_sample_dataset();
        other.num_features = 3;
        other.samples[0].values = Array2::zeros((3, 6));
        let err = train_predictor(&data, Some(&other), &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, ModelError::InvalidArgument(_)));
    }
}
