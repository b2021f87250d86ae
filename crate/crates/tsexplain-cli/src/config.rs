//! Experiment configuration. One TOML file drives every subcommand; flags
//! and `--override` edits layer on top (file < overrides < dedicated flags),
//! and the sha256 of the resolved config is stamped into every artifact so
//! stages can refuse mismatched inputs.

use crate::error::{validation, CliError};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use tsexplain_core::seqdata::SpikeConfig;
use tsexplain_core::seqmodels::{GeneratorMode, TrainConfig};
use tsexplain_core::{ExplainConfig, Method};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Master seed. Sweeps (`evaluate`, `bench`) substitute each entry of
    /// `evaluate.seeds` for it, one run directory per seed.
    pub seed: u64,
    /// Default output root; `--out` and `TSEXPLAIN_OUT` take precedence.
    /// Not part of the config hash: where artifacts land must not change
    /// what they contain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub dataset: DatasetSection,
    pub predictor: TrainSection,
    pub generator: GeneratorSection,
    pub methods: Vec<MethodSection>,
    pub evaluate: EvaluateSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            out_dir: None,
            dataset: DatasetSection::default(),
            predictor: TrainSection::default(),
            generator: GeneratorSection::default(),
            methods: vec![
                MethodSection::new(Method::Fit),
                MethodSection::new(Method::Winit),
                MethodSection::new(Method::Ifit),
            ],
            evaluate: EvaluateSection::default(),
        }
    }
}

impl ExperimentConfig {
    /// Hex sha256 of the resolved config, output root excluded.
    pub fn content_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = None;
        let text = toml::to_string(&canonical).expect("config serializes to TOML");
        let digest = Sha256::digest(text.as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }

    /// Canonical method labels in configuration order, deduplicated.
    pub fn method_labels(&self) -> Vec<String> {
        let mut labels = Vec::new();
        for sec in &self.methods {
            let label = sec.label();
            if !labels.contains(&label) {
                labels.push(label);
            }
        }
        labels
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.dataset.validate()?;
        let sizings = [
            ("predictor", self.predictor.hidden, self.predictor.epochs, self.predictor.batch_size),
            ("generator", self.generator.hidden, self.generator.epochs, self.generator.batch_size),
        ];
        for (name, hidden, epochs, batch) in sizings {
            if hidden == 0 || epochs == 0 || batch == 0 {
                return Err(validation(format!(
                    "{name}: hidden, epochs, and batch_size must all be positive"
                )));
            }
        }
        for m in &self.methods {
            if m.window == 0 {
                return Err(validation(format!("methods: {} window must be positive", m.name)));
            }
            if m.mc_samples == 0 {
                return Err(validation(format!("methods: {} mc_samples must be positive", m.name)));
            }
        }
        for f in &self.evaluate.drop_top_fraction {
            if !(*f > 0.0 && *f <= 1.0) {
                return Err(validation(format!(
                    "evaluate.drop_top_fraction entry {f} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    Spike,
    DelayedSpike,
    /// Pre-existing dataset files; `simulate` has nothing to do.
    File,
}

/// Synthetic benchmark parameters, or a pointer to existing files. The
/// optional fields default to the chosen benchmark's canonical values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    pub kind: DatasetKind,
    pub num_samples: usize,
    /// Fraction of samples that become the training split.
    pub train_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_features: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub narma_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spike_probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spike_magnitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_delay: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trend_slopes: Option<Vec<f64>>,
    /// Only with `kind = "file"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            kind: DatasetKind::Spike,
            num_samples: 1300,
            // Rounds to a 1000/300 split at the default sample count.
            train_fraction: 1000.0 / 1300.0,
            num_features: None,
            num_steps: None,
            narma_order: None,
            spike_probability: None,
            spike_magnitude: None,
            label_delay: None,
            trend_slopes: None,
            train: None,
            test: None,
        }
    }
}

impl DatasetSection {
    fn validate(&self) -> Result<(), CliError> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(validation(format!(
                "dataset.train_fraction {} outside (0, 1)",
                self.train_fraction
            )));
        }
        if self.kind == DatasetKind::File && (self.train.is_none() || self.test.is_none()) {
            return Err(validation(
                "dataset.kind = \"file\" needs both dataset.train and dataset.test paths",
            ));
        }
        Ok(())
    }

    /// The synthetic benchmark for this section, seeded. Field checks beyond
    /// presence happen in the dataset builder, which names the bad field.
    pub fn spike_config(&self, seed: u64) -> Result<SpikeConfig, CliError> {
        let mut cfg = match self.kind {
            DatasetKind::Spike => SpikeConfig::spike(self.num_samples, seed),
            DatasetKind::DelayedSpike => SpikeConfig::delayed_spike(self.num_samples, seed),
            DatasetKind::File => {
                return Err(validation(
                    "dataset.kind = \"file\" points at existing data; nothing to simulate",
                ))
            }
        };
        if let Some(v) = self.num_features {
            cfg.num_features = v;
        }
        if let Some(v) = self.num_steps {
            cfg.num_steps = v;
        }
        if let Some(v) = self.narma_order {
            cfg.narma_order = v;
        }
        if let Some(v) = self.spike_probability {
            cfg.spike_probability = v;
        }
        if let Some(v) = self.spike_magnitude {
            cfg.spike_magnitude = v;
        }
        if let Some(v) = self.label_delay {
            cfg.label_delay = v;
        }
        if let Some(v) = &self.trend_slopes {
            cfg.trend_slopes = v.clone();
        }
        Ok(cfg)
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            DatasetKind::Spike => "spike",
            DatasetKind::DelayedSpike => "delayed-spike",
            DatasetKind::File => "file",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub grad_clip: f64,
    pub patience: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            hidden: 64,
            epochs: 80,
            batch_size: 32,
            learning_rate: 2e-3,
            grad_clip: 5.0,
            patience: 10,
        }
    }
}

impl TrainSection {
    pub fn to_train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            hidden: self.hidden,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            grad_clip: self.grad_clip,
            patience: self.patience,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenMode {
    PerFeature,
    JointDiagonal,
}

impl From<GenMode> for GeneratorMode {
    fn from(m: GenMode) -> GeneratorMode {
        match m {
            GenMode::PerFeature => GeneratorMode::PerFeature,
            GenMode::JointDiagonal => GeneratorMode::JointDiagonal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorSection {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub grad_clip: f64,
    pub patience: usize,
    pub mode: GenMode,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        GeneratorSection {
            hidden: 64,
            epochs: 30,
            batch_size: 32,
            learning_rate: 2e-3,
            grad_clip: 5.0,
            patience: 5,
            mode: GenMode::PerFeature,
        }
    }
}

impl GeneratorSection {
    pub fn to_train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            hidden: self.hidden,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            grad_clip: self.grad_clip,
            patience: self.patience,
            seed,
        }
    }
}

fn default_window() -> usize {
    8
}

fn default_mc_samples() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSection {
    pub name: Method,
    /// Window length N; only WinIT reads it.
    #[serde(default = "default_window")]
    pub window: usize,
    /// Monte Carlo draws L per counterfactual expectation.
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    /// Also write the per-horizon contribution table (WinIT only).
    #[serde(default)]
    pub keep_raw: bool,
}

impl MethodSection {
    pub fn new(name: Method) -> Self {
        MethodSection {
            name,
            window: default_window(),
            mc_samples: default_mc_samples(),
            keep_raw: false,
        }
    }

    /// Canonical form: WinIT with a window of 1 masks exactly one step, which
    /// is the single-step method, so both requests resolve to the same label
    /// and produce identical files.
    pub fn resolved(&self) -> MethodSection {
        let mut sec = self.clone();
        if sec.name == Method::Winit && sec.window == 1 {
            sec.name = Method::Ifit;
        }
        if sec.name == Method::Ifit {
            sec.window = 1;
        }
        sec
    }

    /// Label after canonicalization; names files and report rows.
    pub fn label(&self) -> String {
        let sec = self.resolved();
        sec.name.label(sec.window)
    }

    pub fn to_explain_config(&self, seed: u64) -> ExplainConfig {
        let sec = self.resolved();
        let mut ec = ExplainConfig::new(sec.name);
        ec.window = sec.window;
        ec.mc_samples = sec.mc_samples;
        ec.seed = seed;
        ec.keep_raw = sec.keep_raw;
        ec
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Readout {
    /// One AUC point per (sample, step); sees mid-series label switches.
    PerStep,
    /// One AUC point per sample, read at the last step.
    FinalStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSection {
    /// Seeds aggregated by `evaluate` and swept by `bench`.
    pub seeds: Vec<u64>,
    /// Per-sample top-k masking budgets for the degradation check.
    pub drop_top_k: Vec<usize>,
    /// Global top-fraction masking budgets.
    pub drop_top_fraction: Vec<f64>,
    pub readout: Readout,
    /// Also mask the same budgets at uniformly random ranks for contrast.
    pub random_baseline: bool,
    /// Method label whose scores drive the masking; defaults to the first
    /// configured WinIT entry, then the first method.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drop_method: Option<String>,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        EvaluateSection {
            seeds: vec![0],
            drop_top_k: vec![50],
            drop_top_fraction: vec![0.05],
            readout: Readout::PerStep,
            random_baseline: true,
            drop_method: None,
        }
    }
}

/// Loads the config file (defaults when absent), then applies `--override`
/// entries and finally the dedicated flags.
pub fn load(
    path: Option<&Path>,
    overrides: &[String],
    seed_flag: Option<u64>,
) -> Result<ExperimentConfig, CliError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| validation(format!("cannot read config {}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut tree: toml::Value = text
        .parse::<toml::Table>()
        .map_err(|e| {
            let at = path.map(|p| p.display().to_string()).unwrap_or_default();
            validation(format!("config {at} is not valid TOML: {e}"))
        })?
        .into();
    for entry in overrides {
        apply_override(&mut tree, entry)?;
    }
    if let Some(seed) = seed_flag {
        apply_override(&mut tree, &format!("seed={seed}"))?;
    }
    let config: ExperimentConfig = tree
        .try_into()
        .map_err(|e| validation(format!("config does not match the expected schema: {e}")))?;
    config.validate()?;
    Ok(config)
}

/// `KEY=VALUE` with a dotted key; VALUE is parsed as a TOML literal and falls
/// back to a bare string. Only table paths are supported.
fn apply_override(root: &mut toml::Value, entry: &str) -> Result<(), CliError> {
    let (key, raw) = entry
        .split_once('=')
        .ok_or_else(|| validation(format!("--override `{entry}` is not KEY=VALUE")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(validation(format!("--override `{entry}` has an empty key")));
    }
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut table) => table.remove("v").expect("parsed table has v"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut cursor = root;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        cursor = cursor
            .as_table_mut()
            .ok_or_else(|| validation(format!("--override `{key}`: `{part}` is not a table")))?
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    cursor
        .as_table_mut()
        .ok_or_else(|| validation(format!("--override `{key}` does not end in a table")))?
        .insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let config = ExperimentConfig::default();
        let text = toml::to_string(&config).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(config, back);
        assert_eq!(config.content_hash(), back.content_hash());
    }

    #[test]
    fn hash_ignores_where_outputs_land_but_not_semantics() {
        let base = ExperimentConfig::default();
        let mut moved = base.clone();
        moved.out_dir = Some(PathBuf::from("elsewhere"));
        assert_eq!(base.content_hash(), moved.content_hash());

        let mut reseeded = base.clone();
        reseeded.seed = 9;
        assert_ne!(base.content_hash(), reseeded.content_hash());
    }

    #[test]
    fn overrides_and_seed_flag_take_precedence() {
        let config = load(
            None,
            &[
                "dataset.kind=delayed-spike".into(),
                "dataset.num_samples=40".into(),
                "evaluate.seeds=[1, 2]".into(),
                "seed=3".into(),
            ],
            Some(7),
        )
        .unwrap();
        assert_eq!(config.dataset.kind, DatasetKind::DelayedSpike);
        assert_eq!(config.dataset.num_samples, 40);
        assert_eq!(config.evaluate.seeds, vec![1, 2]);
        assert_eq!(config.seed, 7, "the dedicated flag outranks --override");
    }

    #[test]
    fn unknown_fields_and_malformed_overrides_are_rejected() {
        assert!(load(None, &["dataset.rows=3".into()], None).is_err());
        assert!(load(None, &["no-equals-sign".into()], None).is_err());
    }

    #[test]
    fn winit_window_one_resolves_to_the_single_step_method() {
        let mut sec = MethodSection::new(Method::Winit);
        sec.window = 1;
        assert_eq!(sec.label(), "ifit");
        let ec = sec.to_explain_config(5);
        assert_eq!(ec.method, Method::Ifit);
        assert_eq!(ec.window, 1);

        let ifit = MethodSection::new(Method::Ifit);
        assert_eq!(ifit.to_explain_config(5), ec);
    }
}
