//! `simulate`: build the synthetic benchmark, split it, and write the run's
//! data directory.

use crate::error::{runtime, validation, CliError};
use crate::run::{create_dir, feature_means, write_json, Manifest, HASH_KEY, SEED_KEY};
use crate::Ctx;
use std::fs;
use tsexplain_core::seqdata::write_dataset_file;
use tsexplain_core::{make_spike_dataset, split_dataset, Dataset};

pub fn run(ctx: &Ctx) -> Result<(), CliError> {
    let config = &ctx.config;
    let spike = config.dataset.spike_config(config.seed)?;
    let data = make_spike_dataset(&spike).map_err(|e| validation(e.to_string()))?;
    let (mut train, mut test) = split_dataset(&data, config.dataset.train_fraction, config.seed)
        .map_err(|e| validation(e.to_string()))?;
    if train.samples.is_empty() || test.samples.is_empty() {
        return Err(validation(format!(
            "train_fraction {} leaves an empty split at {} samples",
            config.dataset.train_fraction, config.dataset.num_samples
        )));
    }
    stamp(&mut train, ctx);
    stamp(&mut test, ctx);

    let paths = ctx.paths();
    create_dir(&paths.data_dir())?;
    write_file(&train, &paths.train_data())?;
    write_file(&test, &paths.test_data())?;

    let manifest = Manifest {
        config_hash: ctx.hash.clone(),
        master_seed: config.seed,
        kind: config.dataset.kind_name().to_string(),
        num_features: train.num_features,
        num_steps: train.num_steps,
        num_classes: train.num_classes,
        train_samples: train.samples.len(),
        test_samples: test.samples.len(),
        label_delay: Some(spike.label_delay),
        train_feature_means: feature_means(&train),
    };
    write_json(&paths.manifest(), &manifest)?;

    println!(
        "simulate: {} samples ({} train / {} test), {} features x {} steps -> {}",
        data.samples.len(),
        train.samples.len(),
        test.samples.len(),
        train.num_features,
        train.num_steps,
        paths.data_dir().display()
    );
    Ok(())
}

fn stamp(data: &mut Dataset, ctx: &Ctx) {
    data.metadata.insert(HASH_KEY.into(), ctx.hash.clone());
    data.metadata.insert(SEED_KEY.into(), ctx.config.seed.to_string());
}

fn write_file(data: &Dataset, path: &std::path::Path) -> Result<(), CliError> {
    // Write-then-rename so a crash cannot leave a half-written dataset behind.
    let tmp = path.with_extension("jsonl.tmp");
    write_dataset_file(data, &tmp).map_err(|e| runtime(format!("writing {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| runtime(format!("renaming to {}: {e}", path.display())))
}
