//! Feature-importance explainers for recurrent time-series predictors.
//!
//! The crate is organized around a small pipeline:
//!
//! * [`seqdata`] builds synthetic spike benchmarks on NARMA dynamics and
//!   reads/writes the line-oriented dataset format.
//! * [`seqmodels`] trains the recurrent black-box predictor and the
//!   conditional Gaussian counterfactual generator, both with hand-rolled
//!   reverse-mode gradients, and persists them as versioned checkpoints.
//! * [`explainers`] scores per-observation importance with KL-based methods
//!   (FIT, IFIT, windowed WinIT) and occlusion baselines (FO, AFO).
//! * [`eval`] ranks scores against ground truth (AUROC/AUPRC), runs
//!   carry-forward masking degradation, and aggregates runtimes.
//!
//! All randomness flows through [`rng`], which derives independent ChaCha
//! streams from a master seed, so results are reproducible bit for bit and
//! independent of scheduling.

pub mod eval;
pub mod explainers;
pub mod rng;
pub mod seqdata;
pub mod seqmodels;

pub use eval::{auc_drop, carry_forward_mask, ranking_metrics, DropReport, RankingReport};
pub use explainers::{
    explain_dataset, explain_sample, fit_score, ifit_score, kl_divergence, partial_prediction,
    ExplainConfig, FeatureSet, ImportanceResult, Method, WindowedScores,
};
pub use seqdata::{
    inject_spikes, make_spike_dataset, narma_sequence, read_dataset, split_dataset, write_dataset,
    Dataset, SpikeConfig, TimeSeriesSample,
};
pub use seqmodels::{
    load_generator, load_predictor, save_generator, save_predictor, train_generator,
    train_predictor, CounterfactualGenerator, GeneratorMode, GeneratorModel, PredictiveDistribution,
    PredictorModel, SequencePredictor, TrainConfig, TrainReport,
};
