//! Ranking quality of importance scores against binary ground truth.
//!
//! Scores are compared as-is (no absolute value): these methods are expected
//! to assign their most positive values to the truly important observations.
//! AUROC uses the rank-sum form with mid-ranks for ties; AUPRC integrates
//! the precision-recall curve stepwise over descending score groups, so tied
//! scores enter as a block and the result does not depend on input order.

use super::EvalError;
use crate::explainers::ImportanceResult;
use crate::seqdata::Dataset;
use serde::Serialize;
use std::collections::HashMap;

#[derive(Debug, Clone, Serialize)]
pub struct SampleRanking {
    pub sample_id: String,
    pub auroc: f64,
    pub auprc: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankingReport {
    pub method: String,
    pub per_sample: Vec<SampleRanking>,
    pub auroc_mean: f64,
    /// Sample standard deviation (n - 1); zero when fewer than two samples.
    pub auroc_std: f64,
    pub auprc_mean: f64,
    pub auprc_std: f64,
    /// Samples whose ground truth marks nothing (or everything) important;
    /// ranking is undefined there, so they are left out of the averages.
    pub skipped: usize,
}

/// None when either class is absent.
pub(super) fn auroc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        // Sorted positions i..j share the mid-rank of the 1-based ranks i+1..=j.
        let mid = (i + j + 1) as f64 / 2.0;
        rank_sum += mid * idx[i..j].iter().filter(|&&k| positive[k]).count() as f64;
        i = j;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}

/// None when there are no positives.
fn auprc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    if n_pos == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..j] {
            if positive[k] {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    Some(ap)
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Scores one method's results against the dataset's ground truth grids.
pub fn ranking_metrics(
    results: &[ImportanceResult],
    dataset: &Dataset,
) -> Result<RankingReport, EvalError> {
    if results.is_empty() {
        return Err(EvalError::InvalidArgument("no results to rank".into()));
    }
    let method = results[0].method.clone();
    let by_id: HashMap<&str, usize> = dataset
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();

    let mut per_sample = Vec::new();
    let mut skipped = 0usize;
    for r in results {
        if r.method != method {
            return Err(EvalError::InvalidArgument(format!(
                "mixed methods in one report: {} and {}",
                method, r.method
            )));
        }
        let sample = by_id
            .get(r.sample_id.as_str())
            .map(|&i| &dataset.samples[i])
            .ok_or_else(|| {
                EvalError::InvalidArgument(format!("sample {} not in dataset", r.sample_id))
            })?;
        let gt = sample.gt_importance.as_ref().ok_or_else(|| {
            EvalError::InvalidArgument(format!("sample {} has no ground truth", r.sample_id))
        })?;
        if gt.dim() != r.scores.dim() {
            return Err(EvalError::InvalidArgument(format!(
                "sample {}: scores {:?} vs ground truth {:?}",
                r.sample_id,
                r.scores.dim(),
                gt.dim()
            )));
        }
        if let Some(bad) = r.scores.iter().find(|v| !v.is_finite()) {
            return Err(EvalError::InvalidArgument(format!(
                "sample {} has non-finite score {bad}",
                r.sample_id
            )));
        }
        let scores: Vec<f64> = r.scores.iter().copied().collect();
        let positive: Vec<bool> = gt.iter().map(|&g| g != 0).collect();
        match (auroc(&scores, &positive), auprc(&scores, &positive)) {
            (Some(roc), Some(pr)) => per_sample.push(SampleRanking {
                sample_id: r.sample_id.clone(),
                auroc: roc,
                auprc: pr,
            }),
            _ => skipped += 1,
        }
    }
    if per_sample.is_empty() {
        return Err(EvalError::InvalidArgument(
            "every sample had degenerate ground truth".into(),
        ));
    }
    let (auroc_mean, auroc_std) = mean_std(per_sample.iter().map(|s| s.auroc));
    let (auprc_mean, auprc_std) = mean_std(per_sample.iter().map(|s| s.auprc));
    Ok(RankingReport {
        method,
        per_sample,
        auroc_mean,
        auroc_std,
        auprc_mean,
        auprc_std,
        skipped,
    })
}
