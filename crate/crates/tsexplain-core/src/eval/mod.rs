//! Evaluation of importance scores.
//!
//! Three views, matching how these explainers are usually judged:
//!
//! * [`ranking_metrics`] treats each sample's score grid as a ranking of its
//!   observations and measures AUROC / AUPRC against a binary ground truth.
//! * [`carry_forward_mask`] + [`auc_drop`] measure faithfulness without
//!   ground truth: occlude the highest-scored observations by carrying the
//!   previous value forward and watch the predictor's label AUC degrade.
//! * [`runtime_report`] compares method wall-clock cost against FIT.

mod masking;
mod ranking;
mod runtime;

pub use masking::{
    auc_drop, carry_forward_mask, random_importance, DropReport, MaskSpec, MaskedDataset,
    ReadoutSpec,
};
pub use ranking::{ranking_metrics, RankingReport, SampleRanking};
pub use runtime::{runtime_report, MethodRuntime, RuntimeReport};

use crate::seqmodels::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
