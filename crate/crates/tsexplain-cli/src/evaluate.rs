//! `evaluate`: read every seed's importance files and emit three aggregate
//! reports: score rankings against ground truth, prediction degradation under
//! carry-forward masking, and method runtimes.

use crate::config::Readout;
use crate::error::{runtime, validation, CliError};
use crate::run::{
    check_hash, create_dir, load_predictor_checked, read_dataset_checked, read_json, Manifest,
    RunPaths, Timing,
};
use crate::Ctx;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use tsexplain_core::eval::{
    auc_drop, carry_forward_mask, random_importance, ranking_metrics, DropReport, EvalError,
    MaskSpec, ReadoutSpec,
};
use tsexplain_core::explainers::read_importance;
use tsexplain_core::{ImportanceResult, Method};

#[derive(Debug, Serialize)]
struct SeedRanking {
    seed: u64,
    auroc: f64,
    auprc: f64,
    skipped: usize,
}

#[derive(Debug, Serialize)]
struct RankingRow {
    method: String,
    auroc_mean: f64,
    auroc_std: f64,
    auprc_mean: f64,
    auprc_std: f64,
    per_seed: Vec<SeedRanking>,
}

#[derive(Debug, Serialize)]
struct RankingFile {
    config_hash: String,
    master_seed: u64,
    seeds: Vec<u64>,
    rows: Vec<RankingRow>,
}

#[derive(Debug, Serialize)]
struct DropRow {
    spec: String,
    drop_mean: f64,
    drop_std: f64,
    base_auc_mean: f64,
    masked_auc_mean: f64,
    per_seed: Vec<DropReport>,
}

#[derive(Debug, Serialize)]
struct DropFile {
    config_hash: String,
    master_seed: u64,
    seeds: Vec<u64>,
    method: String,
    readout: ReadoutSpec,
    rows: Vec<DropRow>,
    /// Same budgets applied at uniformly random ranks.
    random: Vec<DropRow>,
}

#[derive(Debug, Serialize)]
struct RuntimeRow {
    method: String,
    seconds_mean: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    speedup_vs_fit: Option<f64>,
}

#[derive(Debug, Serialize)]
struct RuntimeFile {
    config_hash: String,
    master_seed: u64,
    seeds: Vec<u64>,
    rows: Vec<RuntimeRow>,
}

pub fn run(ctx: &Ctx) -> Result<(), CliError> {
    let ev = &ctx.config.evaluate;
    if ev.seeds.is_empty() {
        return Err(validation(
            "evaluate.seeds is empty; configure at least one seed",
        ));
    }
    let labels = method_labels(ctx)?;
    let drop_label = resolve_drop_label(ctx, &labels)?;
    let readout = match ev.readout {
        Readout::PerStep => ReadoutSpec::PerStep,
        Readout::FinalStep => ReadoutSpec::FinalStep,
    };

    let mut rankings: BTreeMap<String, Vec<SeedRanking>> = BTreeMap::new();
    let mut timings: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut drops: BTreeMap<String, Vec<DropReport>> = BTreeMap::new();
    let mut random_drops: BTreeMap<String, Vec<DropReport>> = BTreeMap::new();

    for &seed in &ev.seeds {
        let (_, hash) = ctx.with_seed(seed);
        let paths = RunPaths::new(&ctx.out_root, seed);
        let test = read_dataset_checked(&paths.test_data(), &hash, ctx.force)?;
        let manifest: Manifest = read_json(&paths.manifest())?;
        check_hash("manifest", &paths.manifest(), &manifest.config_hash, &hash, ctx.force)?;

        let mut drop_results: Option<Vec<ImportanceResult>> = None;
        for label in &labels {
            let path = paths.importance(label);
            let file = fs::File::open(&path).map_err(|e| {
                validation(format!(
                    "cannot open importance file {}: {e}; run `tsexplain explain` for seed {seed}",
                    path.display()
                ))
            })?;
            let (meta, results) = read_importance(BufReader::new(file))
                .map_err(|e| validation(format!("{}: {e}", path.display())))?;
            check_hash("importance file", &path, &meta.config_hash, &hash, ctx.force)?;

            let report = ranking_metrics(&results, &test).map_err(eval_error)?;
            rankings.entry(label.clone()).or_default().push(SeedRanking {
                seed,
                auroc: report.auroc_mean,
                auprc: report.auprc_mean,
                skipped: report.skipped,
            });
            let timing: Timing = read_json(&paths.importance_timing(label))?;
            timings.entry(label.clone()).or_default().push(timing.wall_seconds);
            if label == &drop_label {
                drop_results = Some(results);
            }
        }

        let results = drop_results.expect("drop label is one of the ranked labels");
        let predictor = load_predictor_checked(&paths, &hash, ctx.force)?;
        let specs = mask_specs(ctx);
        for spec in &specs {
            let masked = carry_forward_mask(&test, &results, spec, &manifest.train_feature_means)
                .map_err(eval_error)?;
            let report = auc_drop(&predictor, &test, &masked, readout).map_err(eval_error)?;
            drops.entry(report.spec.clone()).or_default().push(report);
        }
        if ev.random_baseline {
            let rand_scores = random_importance(&test, seed);
            for spec in &specs {
                let masked =
                    carry_forward_mask(&test, &rand_scores, spec, &manifest.train_feature_means)
                        .map_err(eval_error)?;
                let report = auc_drop(&predictor, &test, &masked, readout).map_err(eval_error)?;
                random_drops.entry(report.spec.clone()).or_default().push(report);
            }
        }
    }

    let reports_dir = ctx.out_root.join("reports");
    create_dir(&reports_dir)?;

    let ranking_rows: Vec<RankingRow> = labels
        .iter()
        .map(|label| {
            let per_seed = rankings.remove(label).unwrap_or_default();
            let (auroc_mean, auroc_std) = mean_std(per_seed.iter().map(|s| s.auroc));
            let (auprc_mean, auprc_std) = mean_std(per_seed.iter().map(|s| s.auprc));
            RankingRow {
                method: label.clone(),
                auroc_mean,
                auroc_std,
                auprc_mean,
                auprc_std,
                per_seed,
            }
        })
        .collect();
    let ranking_file = RankingFile {
        config_hash: ctx.hash.clone(),
        master_seed: ctx.config.seed,
        seeds: ev.seeds.clone(),
        rows: ranking_rows,
    };
    crate::run::write_json(&reports_dir.join("ranking.json"), &ranking_file)?;

    let spec_order: Vec<String> = mask_specs(ctx).iter().map(|s| spec_label(s)).collect();
    let drop_file = DropFile {
        config_hash: ctx.hash.clone(),
        master_seed: ctx.config.seed,
        seeds: ev.seeds.clone(),
        method: drop_label.clone(),
        readout,
        rows: collect_drop_rows(&spec_order, drops),
        random: collect_drop_rows(&spec_order, random_drops),
    };
    crate::run::write_json(&reports_dir.join("drop.json"), &drop_file)?;

    let runtime_rows: Vec<RuntimeRow> = {
        let seconds: Vec<(String, f64)> = labels
            .iter()
            .map(|label| {
                let xs = &timings[label];
                (label.clone(), xs.iter().sum::<f64>() / xs.len() as f64)
            })
            .collect();
        let fit = seconds.iter().find(|(m, _)| m == "fit").map(|&(_, s)| s);
        seconds
            .into_iter()
            .map(|(method, seconds_mean)| RuntimeRow {
                speedup_vs_fit: fit.map(|f| f / seconds_mean),
                method,
                seconds_mean,
            })
            .collect()
    };
    let runtime_file = RuntimeFile {
        config_hash: ctx.hash.clone(),
        master_seed: ctx.config.seed,
        seeds: ev.seeds.clone(),
        rows: runtime_rows,
    };
    // wall-clock data, so it shares the *.timing.json exemption from
    // byte-identical reruns
    crate::run::write_json(&reports_dir.join("runtime.timing.json"), &runtime_file)?;

    print_summary(&ranking_file, &drop_file, &runtime_file);
    Ok(())
}

fn method_labels(ctx: &Ctx) -> Result<Vec<String>, CliError> {
    let labels = ctx.config.method_labels();
    if labels.is_empty() {
        return Err(validation("no methods configured; add [[methods]] entries"));
    }
    Ok(labels)
}

fn resolve_drop_label(ctx: &Ctx, labels: &[String]) -> Result<String, CliError> {
    if let Some(wanted) = &ctx.config.evaluate.drop_method {
        if !labels.contains(wanted) {
            return Err(validation(format!(
                "evaluate.drop_method `{wanted}` is not a configured method (have: {})",
                labels.join(", ")
            )));
        }
        return Ok(wanted.clone());
    }
    let first_winit = ctx
        .config
        .methods
        .iter()
        .find(|s| s.resolved().name == Method::Winit)
        .map(|s| s.label());
    Ok(first_winit.unwrap_or_else(|| labels[0].clone()))
}

fn mask_specs(ctx: &Ctx) -> Vec<MaskSpec> {
    let ev = &ctx.config.evaluate;
    let mut specs: Vec<MaskSpec> = ev.drop_top_k.iter().map(|&k| MaskSpec::TopKPerSample(k)).collect();
    specs.extend(ev.drop_top_fraction.iter().map(|&f| MaskSpec::TopFractionGlobal(f)));
    specs
}

/// Mirrors the label the masking stage stamps into its reports.
fn spec_label(spec: &MaskSpec) -> String {
    match spec {
        MaskSpec::TopKPerSample(k) => format!("top{k}-per-sample"),
        MaskSpec::TopFractionGlobal(f) => format!("top{}pct-global", f * 100.0),
    }
}

fn collect_drop_rows(
    order: &[String],
    mut by_spec: BTreeMap<String, Vec<DropReport>>,
) -> Vec<DropRow> {
    order
        .iter()
        .filter_map(|spec| {
            let per_seed = by_spec.remove(spec)?;
            let (drop_mean, drop_std) = mean_std(per_seed.iter().map(|r| r.drop));
            let (base_auc_mean, _) = mean_std(per_seed.iter().map(|r| r.base_auc));
            let (masked_auc_mean, _) = mean_std(per_seed.iter().map(|r| r.masked_auc));
            Some(DropRow {
                spec: spec.clone(),
                drop_mean,
                drop_std,
                base_auc_mean,
                masked_auc_mean,
                per_seed,
            })
        })
        .collect()
}

fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let xs: Vec<f64> = values.collect();
    if xs.is_empty() {
        return (f64::NAN, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (mean, var.sqrt())
}

fn eval_error(err: EvalError) -> CliError {
    match err {
        EvalError::InvalidArgument(msg) => validation(msg),
        EvalError::Model(e) => runtime(format!("evaluation failed: {e}")),
    }
}

fn print_summary(ranking: &RankingFile, drop: &DropFile, rt: &RuntimeFile) {
    let n = ranking.seeds.len();
    println!("ranking over {n} seed(s):");
    for row in &ranking.rows {
        println!(
            "  {:<10} auroc {:.3} ± {:.3}   auprc {:.3} ± {:.3}",
            row.method, row.auroc_mean, row.auroc_std, row.auprc_mean, row.auprc_std
        );
    }
    println!("masking degradation ({} ranking):", drop.method);
    for (label, rows) in [("scores", &drop.rows), ("random", &drop.random)] {
        for row in rows.iter() {
            println!(
                "  {label:<7} {:<18} auc {:.3} -> {:.3}  drop {:.3} ± {:.3}",
                row.spec, row.base_auc_mean, row.masked_auc_mean, row.drop_mean, row.drop_std
            );
        }
    }
    println!("runtime (mean seconds over seeds):");
    for row in &rt.rows {
        match row.speedup_vs_fit {
            Some(s) => println!("  {:<10} {:>8.1}s  {s:.1}x vs fit", row.method, row.seconds_mean),
            None => println!("  {:<10} {:>8.1}s", row.method, row.seconds_mean),
        }
    }
}
