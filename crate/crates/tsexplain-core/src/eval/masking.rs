//! Faithfulness via carry-forward occlusion.
//!
//! The highest-scored observations (by absolute value) are replaced with the
//! most recent surviving value of the same feature, i.e. the series freezes
//! across masked cells instead of jumping to an out-of-distribution constant.
//! A masked first step falls back to a caller-supplied per-feature value,
//! conventionally the training mean. If the scores point at observations the
//! predictor truly relies on, its label AUC drops.

use super::ranking::auroc;
use super::EvalError;
use crate::explainers::ImportanceResult;
use crate::rng::{sample_key, stream, tag};
use crate::seqdata::Dataset;
use crate::seqmodels::SequencePredictor;
use rand::Rng;
use serde::Serialize;
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq)]
pub enum MaskSpec {
    /// Mask the k strongest cells of every sample.
    TopKPerSample(usize),
    /// Mask the strongest fraction (0, 1] of cells across the whole dataset,
    /// rounded down.
    TopFractionGlobal(f64),
}

impl MaskSpec {
    fn validate(&self) -> Result<(), EvalError> {
        match self {
            MaskSpec::TopKPerSample(0) => {
                Err(EvalError::InvalidArgument("top-k mask needs k >= 1".into()))
            }
            MaskSpec::TopFractionGlobal(f) if !(*f > 0.0 && *f <= 1.0) => Err(
                EvalError::InvalidArgument(format!("mask fraction {f} outside (0, 1]")),
            ),
            _ => Ok(()),
        }
    }

    fn label(&self) -> String {
        match self {
            MaskSpec::TopKPerSample(k) => format!("top{k}-per-sample"),
            MaskSpec::TopFractionGlobal(f) => format!("top{}pct-global", f * 100.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MaskedDataset {
    pub data: Dataset,
    pub masked_cells: usize,
    pub spec: String,
}

/// Which predictions enter the label AUC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReadoutSpec {
    /// One point per sample: the last step's prediction against the last
    /// label. The usual choice when the label only resolves at the end.
    FinalStep,
    /// One point per (sample, step). Needed when labels switch mid-series,
    /// otherwise early-step behaviour is invisible to the metric.
    PerStep,
}

impl Default for ReadoutSpec {
    fn default() -> Self {
        ReadoutSpec::FinalStep
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DropReport {
    pub spec: String,
    pub readout: ReadoutSpec,
    pub base_auc: f64,
    pub masked_auc: f64,
    /// base minus masked; positive means the masked cells mattered.
    pub drop: f64,
    pub masked_cells: usize,
}

fn pair_results<'a>(
    dataset: &Dataset,
    results: &'a [ImportanceResult],
) -> Result<Vec<&'a ImportanceResult>, EvalError> {
    if results.len() != dataset.samples.len() {
        return Err(EvalError::InvalidArgument(format!(
            "{} results for {} samples",
            results.len(),
            dataset.samples.len()
        )));
    }
    let by_id: HashMap<&str, &ImportanceResult> =
        results.iter().map(|r| (r.sample_id.as_str(), r)).collect();
    if by_id.len() != results.len() {
        return Err(EvalError::InvalidArgument("duplicate sample ids in results".into()));
    }
    dataset
        .samples
        .iter()
        .map(|s| {
            let r = by_id.get(s.id.as_str()).copied().ok_or_else(|| {
                EvalError::InvalidArgument(format!("no scores for sample {}", s.id))
            })?;
            if r.scores.dim() != (dataset.num_features, dataset.num_steps) {
                return Err(EvalError::InvalidArgument(format!(
                    "sample {}: scores {:?} vs dataset ({}, {})",
                    s.id,
                    r.scores.dim(),
                    dataset.num_features,
                    dataset.num_steps
                )));
            }
            if let Some(bad) = r.scores.iter().find(|v| !v.is_finite()) {
                return Err(EvalError::InvalidArgument(format!(
                    "sample {} has non-finite score {bad}",
                    s.id
                )));
            }
            Ok(r)
        })
        .collect()
}

/// Builds the occluded copy of `dataset`. `fill_start` supplies the value of
/// a masked cell at step 0 for each feature (there is nothing to carry yet).
pub fn carry_forward_mask(
    dataset: &Dataset,
    results: &[ImportanceResult],
    spec: &MaskSpec,
    fill_start: &[f64],
) -> Result<MaskedDataset, EvalError> {
    spec.validate()?;
    if fill_start.len() != dataset.num_features {
        return Err(EvalError::InvalidArgument(format!(
            "{} start fills for {} features",
            fill_start.len(),
            dataset.num_features
        )));
    }
    let paired = pair_results(dataset, results)?;
    let (d, t_len) = (dataset.num_features, dataset.num_steps);

    // (sample, feature, step) cells to mask, strongest |score| first. Ties
    // break on cell position so selection never depends on sort internals.
    let sort_cells = |cells: &mut Vec<(usize, usize, usize)>| {
        cells.sort_by(|&(i, f, t), &(j, g, u)| {
            paired[j].scores[[g, u]]
                .abs()
                .total_cmp(&paired[i].scores[[f, t]].abs())
                .then(i.cmp(&j))
                .then(f.cmp(&g))
                .then(t.cmp(&u))
        });
    };
    let mut chosen: Vec<(usize, usize, usize)> = Vec::new();
    match spec {
        MaskSpec::TopKPerSample(k) => {
            for i in 0..paired.len() {
                let mut cells: Vec<_> =
                    (0..d).flat_map(|f| (0..t_len).map(move |t| (i, f, t))).collect();
                sort_cells(&mut cells);
                cells.truncate(*k.min(&(d * t_len)));
                chosen.extend(cells);
            }
        }
        MaskSpec::TopFractionGlobal(frac) => {
            let mut cells: Vec<_> = (0..paired.len())
                .flat_map(|i| (0..d).flat_map(move |f| (0..t_len).map(move |t| (i, f, t))))
                .collect();
            sort_cells(&mut cells);
            cells.truncate((frac * cells.len() as f64).floor() as usize);
            chosen = cells;
        }
    }

    let mut data = dataset.clone();
    let mut masks = vec![ndarray::Array2::<bool>::default((d, t_len)); data.samples.len()];
    for (i, f, t) in &chosen {
        masks[*i][[*f, *t]] = true;
    }
    for (sample, mask) in data.samples.iter_mut().zip(&masks) {
        for t in 0..t_len {
            for f in 0..d {
                if mask[[f, t]] {
                    sample.values[[f, t]] =
                        if t == 0 { fill_start[f] } else { sample.values[[f, t - 1]] };
                }
            }
        }
    }
    let label = spec.label();
    data.metadata.insert("mask_spec".into(), label.clone());
    data.metadata.insert("masked_cells".into(), chosen.len().to_string());
    Ok(MaskedDataset { data, masked_cells: chosen.len(), spec: label })
}

fn label_scores<P: SequencePredictor>(
    predictor: &P,
    data: &Dataset,
    labels_from: &Dataset,
    readout: ReadoutSpec,
) -> (Vec<f64>, Vec<bool>) {
    let mut scores = Vec::new();
    let mut positive = Vec::new();
    for (sample, truth) in data.samples.iter().zip(&labels_from.samples) {
        let dists = predictor.forward(&sample.values);
        match readout {
            ReadoutSpec::FinalStep => {
                scores.push(dists[dists.len() - 1].probs()[1]);
                positive.push(*truth.labels.last().unwrap() == 1);
            }
            ReadoutSpec::PerStep => {
                for (dist, &label) in dists.iter().zip(&truth.labels) {
                    scores.push(dist.probs()[1]);
                    positive.push(label == 1);
                }
            }
        }
    }
    (scores, positive)
}

/// Label AUC before and after masking. Binary tasks only: the score of a
/// prediction is p(class 1), compared against the true labels of `base`.
pub fn auc_drop<P: SequencePredictor>(
    predictor: &P,
    base: &Dataset,
    masked: &MaskedDataset,
    readout: ReadoutSpec,
) -> Result<DropReport, EvalError> {
    if predictor.num_classes() != 2 || base.num_classes != 2 {
        return Err(EvalError::InvalidArgument(
            "label AUC is defined for binary tasks only".into(),
        ));
    }
    if predictor.num_features() != base.num_features {
        return Err(EvalError::InvalidArgument(format!(
            "predictor expects {} features, dataset has {}",
            predictor.num_features(),
            base.num_features
        )));
    }
    let aligned = base.samples.len() == masked.data.samples.len()
        && base
            .samples
            .iter()
            .zip(&masked.data.samples)
            .all(|(a, b)| a.id == b.id && a.values.dim() == b.values.dim());
    if !aligned {
        return Err(EvalError::InvalidArgument(
            "masked dataset does not line up with the base dataset".into(),
        ));
    }
    let (base_scores, positive) = label_scores(predictor, base, base, readout);
    let (masked_scores, _) = label_scores(predictor, &masked.data, base, readout);
    let base_auc = auroc(&base_scores, &positive).ok_or_else(|| {
        EvalError::InvalidArgument("label AUC undefined: only one class present".into())
    })?;
    let masked_auc = auroc(&masked_scores, &positive).expect("same labels");
    Ok(DropReport {
        spec: masked.spec.clone(),
        readout,
        base_auc,
        masked_auc,
        drop: base_auc - masked_auc,
        masked_cells: masked.masked_cells,
    })
}

/// Uniform-noise scores, the baseline a useful explainer has to beat under
/// the same mask budget.
pub fn random_importance(dataset: &Dataset, seed: u64) -> Vec<ImportanceResult> {
    dataset
        .samples
        .iter()
        .map(|s| {
            let mut rng = stream(seed, &[tag::MASK_RANDOM, sample_key(&s.id)]);
            let scores = ndarray::Array2::from_shape_simple_fn(
                (dataset.num_features, dataset.num_steps),
                || rng.gen::<f64>(),
            );
            ImportanceResult {
                sample_id: s.id.clone(),
                method: "random".to_string(),
                scores,
                raw: None,
                wall_seconds: 0.0,
            }
        })
        .collect()
}
