//! Run directory layout and artifact plumbing shared by the subcommands.
//!
//! Everything under a seed directory is a pure function of (config, seed),
//! except the `*.timing.json` sidecars, which hold wall clocks and are the
//! only files allowed to differ between reruns.

use crate::error::{runtime, validation, CliError};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use tsexplain_core::seqmodels::{load_generator, load_predictor, GeneratorModel, PredictorModel};
use tsexplain_core::{read_dataset, Dataset};

pub const HASH_KEY: &str = "config_hash";
pub const SEED_KEY: &str = "master_seed";

#[derive(Debug, Clone)]
pub struct RunPaths {
    pub root: PathBuf,
}

impl RunPaths {
    pub fn new(out_root: &Path, seed: u64) -> Self {
        RunPaths {
            root: out_root.join(format!("seed-{seed}")),
        }
    }

    pub fn data_dir(&self) -> PathBuf {
        self.root.join("data")
    }

    pub fn train_data(&self) -> PathBuf {
        self.data_dir().join("train.jsonl")
    }

    pub fn test_data(&self) -> PathBuf {
        self.data_dir().join("test.jsonl")
    }

    pub fn manifest(&self) -> PathBuf {
        self.data_dir().join("manifest.json")
    }

    pub fn models_dir(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn checkpoint(&self, role: &str) -> PathBuf {
        self.models_dir().join(format!("{role}.ckpt"))
    }

    pub fn model_meta(&self, role: &str) -> PathBuf {
        self.models_dir().join(format!("{role}.meta.json"))
    }

    pub fn model_timing(&self, role: &str) -> PathBuf {
        self.models_dir().join(format!("{role}.timing.json"))
    }

    pub fn importance_dir(&self) -> PathBuf {
        self.root.join("importance")
    }

    pub fn importance(&self, label: &str) -> PathBuf {
        self.importance_dir().join(format!("{label}.csv"))
    }

    pub fn importance_timing(&self, label: &str) -> PathBuf {
        self.importance_dir().join(format!("{label}.timing.json"))
    }

    pub fn windowed(&self, label: &str) -> PathBuf {
        self.importance_dir().join(format!("{label}.raw.csv"))
    }

    pub fn renders_dir(&self) -> PathBuf {
        self.root.join("renders")
    }
}

/// What `simulate` wrote; downstream stages trust it for shapes and fills.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub master_seed: u64,
    pub kind: String,
    pub num_features: usize,
    pub num_steps: usize,
    pub num_classes: usize,
    pub train_samples: usize,
    pub test_samples: usize,
    pub label_delay: Option<usize>,
    /// Per-feature mean over the training split; the carry-forward fill for
    /// masked cells at step 0.
    pub train_feature_means: Vec<f64>,
}

/// Deterministic companion of a checkpoint (the wall clock lives in the
/// timing sidecar instead).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelMeta {
    pub config_hash: String,
    pub master_seed: u64,
    pub role: String,
    pub hidden: usize,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub train_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub valid_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub valid_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator_mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub held_out_nll: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| runtime(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| runtime(format!("writing {}: {e}", path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| validation(format!("{}: {e}", path.display())))
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path)
        .map_err(|e| runtime(format!("creating directory {}: {e}", path.display())))
}

/// Fails fast when an upstream artifact was produced under a different
/// config, unless `--force` was passed.
pub fn check_hash(
    what: &str,
    path: &Path,
    found: &str,
    expected: &str,
    force: bool,
) -> Result<(), CliError> {
    if found == expected {
        return Ok(());
    }
    if force {
        log::warn!(
            "{what} {} carries config hash {found}, current config hashes to {expected}; \
             continuing because of --force",
            path.display()
        );
        return Ok(());
    }
    Err(validation(format!(
        "{what} {} was written under config hash {found}, but the current config hashes to \
         {expected}; rerun the upstream stage or pass --force",
        path.display()
    )))
}

/// Reads a dataset file and verifies its embedded config hash.
pub fn read_dataset_checked(
    path: &Path,
    expected_hash: &str,
    force: bool,
) -> Result<Dataset, CliError> {
    let file = fs::File::open(path).map_err(|e| {
        validation(format!(
            "cannot open dataset {}: {e}; run `tsexplain simulate` first",
            path.display()
        ))
    })?;
    let data = read_dataset(std::io::BufReader::new(file))
        .map_err(|e| validation(format!("{}: {e}", path.display())))?;
    if let Some(found) = data.metadata.get(HASH_KEY) {
        check_hash("dataset", path, found, expected_hash, force)?;
    }
    Ok(data)
}

pub fn load_predictor_checked(
    paths: &RunPaths,
    expected_hash: &str,
    force: bool,
) -> Result<PredictorModel, CliError> {
    let path = paths.checkpoint("predictor");
    let file = fs::File::open(&path).map_err(|e| {
        validation(format!(
            "cannot open predictor checkpoint {}: {e}; run `tsexplain train --role predictor`",
            path.display()
        ))
    })?;
    let model = load_predictor(std::io::BufReader::new(file))
        .map_err(|e| validation(format!("{}: {e}", path.display())))?;
    let meta: ModelMeta = read_json(&paths.model_meta("predictor"))?;
    check_hash("checkpoint", &path, &meta.config_hash, expected_hash, force)?;
    Ok(model)
}

pub fn load_generator_checked(
    paths: &RunPaths,
    expected_hash: &str,
    force: bool,
) -> Result<GeneratorModel, CliError> {
    let path = paths.checkpoint("generator");
    let file = fs::File::open(&path).map_err(|e| {
        validation(format!(
            "cannot open generator checkpoint {}: {e}; run `tsexplain train --role generator`",
            path.display()
        ))
    })?;
    let model = load_generator(std::io::BufReader::new(file))
        .map_err(|e| validation(format!("{}: {e}", path.display())))?;
    let meta: ModelMeta = read_json(&paths.model_meta("generator"))?;
    check_hash("checkpoint", &path, &meta.config_hash, expected_hash, force)?;
    Ok(model)
}

pub fn feature_means(data: &Dataset) -> Vec<f64> {
    let mut means = vec![0.0; data.num_features];
    let mut steps = 0usize;
    for sample in &data.samples {
        for f in 0..data.num_features {
            for t in 0..data.num_steps {
                means[f] += sample.values[[f, t]];
            }
        }
        steps += data.num_steps;
    }
    for m in &mut means {
        *m /= steps.max(1) as f64;
    }
    means
}
