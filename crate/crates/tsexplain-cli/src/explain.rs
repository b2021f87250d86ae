//! `explain`: score the test split with the configured methods and write one
//! importance file (plus timing sidecar) per method label.

use crate::config::MethodSection;
use crate::error::{runtime, validation, CliError};
use crate::run::{
    create_dir, load_generator_checked, load_predictor_checked, read_dataset_checked, write_json,
    RunPaths, Timing,
};
use crate::Ctx;
use std::fs;
use std::io::{BufWriter, Write};
use tsexplain_core::explainers::{write_importance, write_windowed, ImportanceMeta};
use tsexplain_core::seqmodels::{CounterfactualGenerator, GeneratorModel, PredictorModel};
use tsexplain_core::{explain_dataset, Dataset, ImportanceResult, Method};

pub fn run(
    ctx: &Ctx,
    method: Option<&str>,
    window: Option<usize>,
    samples: Option<usize>,
) -> Result<(), CliError> {
    let paths = ctx.paths();
    let test = read_dataset_checked(&paths.test_data(), &ctx.hash, ctx.force)?;
    let predictor = load_predictor_checked(&paths, &ctx.hash, ctx.force)?;

    let mut sections: Vec<MethodSection> = match method {
        Some(name) => {
            let wanted: Method = name.parse().map_err(validation)?;
            let base = ctx
                .config
                .methods
                .iter()
                .find(|s| s.name == wanted)
                .cloned()
                .unwrap_or_else(|| MethodSection::new(wanted));
            vec![base]
        }
        None => {
            if ctx.config.methods.is_empty() {
                return Err(validation(
                    "no methods configured; add [[methods]] entries or pass --method",
                ));
            }
            ctx.config.methods.clone()
        }
    };
    for sec in &mut sections {
        if let Some(w) = window {
            sec.window = w;
        }
        if let Some(l) = samples {
            sec.mc_samples = l;
        }
    }

    create_dir(&paths.importance_dir())?;
    // The generator is loaded lazily: occlusion baselines run without one.
    let mut generator: Option<GeneratorModel> = None;
    for sec in &sections {
        let resolved = sec.resolved();
        if sec.name == Method::Winit && resolved.name == Method::Ifit {
            println!("explain: winit with a window of 1 is the single-step method; writing ifit");
        }
        let needs_generator = matches!(resolved.name, Method::Fit | Method::Ifit | Method::Winit);
        if needs_generator && generator.is_none() {
            let path = ctx.paths().checkpoint("generator");
            if !path.exists() {
                return Err(validation(format!(
                    "method {} samples counterfactuals and needs the generator checkpoint {}; \
                     run `tsexplain train --role generator` first",
                    resolved.name,
                    path.display()
                )));
            }
            generator = Some(load_generator_checked(&paths, &ctx.hash, ctx.force)?);
        }
        let results = match &generator {
            Some(g) => score(&predictor, g, &test, &resolved, ctx.config.seed)?,
            None => {
                let null = NullGenerator {
                    num_features: test.num_features,
                };
                score(&predictor, &null, &test, &resolved, ctx.config.seed)?
            }
        };
        write_outputs(ctx, &paths, &test, &resolved, &results)?;
    }
    Ok(())
}

fn score<G: CounterfactualGenerator + Sync>(
    predictor: &PredictorModel,
    generator: &G,
    test: &Dataset,
    sec: &MethodSection,
    seed: u64,
) -> Result<Vec<ImportanceResult>, CliError> {
    let ec = sec.to_explain_config(seed);
    explain_dataset(predictor, generator, test, &ec)
        .map_err(|e| runtime(format!("scoring {}: {e}", sec.label())))
}

fn write_outputs(
    ctx: &Ctx,
    paths: &RunPaths,
    test: &Dataset,
    sec: &MethodSection,
    results: &[ImportanceResult],
) -> Result<(), CliError> {
    let label = sec.label();
    let meta = ImportanceMeta {
        method: label.clone(),
        config_hash: ctx.hash.clone(),
        seed: ctx.config.seed,
        window: sec.resolved().window,
        mc_samples: sec.mc_samples,
        num_features: test.num_features,
        num_steps: test.num_steps,
    };

    let path = paths.importance(&label);
    let tmp = path.with_extension("csv.tmp");
    let file = fs::File::create(&tmp).map_err(|e| runtime(format!("creating {}: {e}", tmp.display())))?;
    let mut writer = BufWriter::new(file);
    write_importance(&mut writer, &meta, results)
        .map_err(|e| runtime(format!("writing {}: {e}", tmp.display())))?;
    writer.flush().map_err(|e| runtime(format!("flushing {}: {e}", tmp.display())))?;
    drop(writer);
    fs::rename(&tmp, &path).map_err(|e| runtime(format!("renaming to {}: {e}", path.display())))?;

    let wall: f64 = results.iter().map(|r| r.wall_seconds).sum();
    write_json(&paths.importance_timing(&label), &Timing { wall_seconds: wall })?;

    if sec.keep_raw && results.iter().any(|r| r.raw.is_some()) {
        let raw_path = paths.windowed(&label);
        let file = fs::File::create(&raw_path)
            .map_err(|e| runtime(format!("creating {}: {e}", raw_path.display())))?;
        let mut writer = BufWriter::new(file);
        write_windowed(&mut writer, &meta, results)
            .map_err(|e| runtime(format!("writing {}: {e}", raw_path.display())))?;
        writer
            .flush()
            .map_err(|e| runtime(format!("flushing {}: {e}", raw_path.display())))?;
    }

    println!(
        "explain: {label} scored {} samples in {wall:.1}s -> {}",
        results.len(),
        path.display()
    );
    Ok(())
}

/// Stand-in for methods that never sample counterfactuals.
struct NullGenerator {
    num_features: usize,
}

impl CounterfactualGenerator for NullGenerator {
    type State = ();

    fn num_features(&self) -> usize {
        self.num_features
    }

    fn init_state(&self) -> Self::State {}

    fn advance(&self, _state: &mut Self::State, _x: &[f64]) {}

    fn next_dist(&self, _state: &Self::State, _features: &[usize], means: &mut [f64], stds: &mut [f64]) {
        means.fill(0.0);
        stds.fill(1.0);
    }
}
