//! `train`: fit the predictor or the counterfactual generator on the run's
//! training split and checkpoint the best epoch.

use crate::error::{from_training, runtime, CliError};
use crate::run::{
    create_dir, read_dataset_checked, write_json, ModelMeta, Timing, RunPaths,
};
use crate::Ctx;
use clap::ValueEnum;
use std::fs;
use std::io::BufWriter;
use tsexplain_core::seqmodels::{
    save_generator, save_predictor, train_generator, train_predictor, TrainReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Role {
    Predictor,
    Generator,
}

impl Role {
    fn name(&self) -> &'static str {
        match self {
            Role::Predictor => "predictor",
            Role::Generator => "generator",
        }
    }
}

pub fn run(ctx: &Ctx, role: Role) -> Result<(), CliError> {
    let paths = ctx.paths();
    let train = read_dataset_checked(&paths.train_data(), &ctx.hash, ctx.force)?;
    let test = read_dataset_checked(&paths.test_data(), &ctx.hash, ctx.force)?;
    create_dir(&paths.models_dir())?;

    match role {
        Role::Predictor => {
            let tc = ctx.config.predictor.to_train_config(ctx.config.seed);
            let (model, report) = train_predictor(&train, Some(&test), &tc).map_err(from_training)?;
            save_checkpoint(&paths, role, |w| save_predictor(w, &model))?;
            let best = best_stats(&report);
            write_meta(
                ctx,
                &paths,
                role,
                tc.hidden,
                &report,
                ModelExtras {
                    valid_loss: best.and_then(|s| s.valid_loss),
                    valid_accuracy: best.and_then(|s| s.valid_accuracy),
                    generator_mode: None,
                    held_out_nll: None,
                },
            )?;
            let accuracy = best.and_then(|s| s.valid_accuracy).unwrap_or(f64::NAN);
            println!(
                "train predictor: {} epochs, best {} with validation accuracy {:.4} ({:.1}s) -> {}",
                report.epochs.len(),
                report.best_epoch,
                accuracy,
                report.wall_seconds,
                paths.checkpoint(role.name()).display()
            );
        }
        Role::Generator => {
            let tc = ctx.config.generator.to_train_config(ctx.config.seed);
            let mode = ctx.config.generator.mode;
            let (model, report) =
                train_generator(&train, &tc, mode.into()).map_err(from_training)?;
            save_checkpoint(&paths, role, |w| save_generator(w, &model))?;
            let nll = model.mean_nll(&test);
            write_meta(
                ctx,
                &paths,
                role,
                tc.hidden,
                &report,
                ModelExtras {
                    valid_loss: None,
                    valid_accuracy: None,
                    generator_mode: Some(mode_name(mode).to_string()),
                    held_out_nll: Some(nll),
                },
            )?;
            println!(
                "train generator: {} epochs, best {} with held-out NLL {:.4} ({:.1}s) -> {}",
                report.epochs.len(),
                report.best_epoch,
                nll,
                report.wall_seconds,
                paths.checkpoint(role.name()).display()
            );
        }
    }
    Ok(())
}

struct ModelExtras {
    valid_loss: Option<f64>,
    valid_accuracy: Option<f64>,
    generator_mode: Option<String>,
    held_out_nll: Option<f64>,
}

fn mode_name(mode: crate::config::GenMode) -> &'static str {
    match mode {
        crate::config::GenMode::PerFeature => "per-feature",
        crate::config::GenMode::JointDiagonal => "joint-diagonal",
    }
}

fn best_stats(report: &TrainReport) -> Option<&tsexplain_core::seqmodels::EpochStats> {
    report.epochs.get(report.best_epoch.wrapping_sub(1))
}

fn save_checkpoint<F>(paths: &RunPaths, role: Role, save: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> Result<(), tsexplain_core::seqmodels::ModelError>,
{
    let path = paths.checkpoint(role.name());
    let tmp = path.with_extension("ckpt.tmp");
    let file = fs::File::create(&tmp).map_err(|e| runtime(format!("creating {}: {e}", tmp.display())))?;
    let mut writer = BufWriter::new(file);
    save(&mut writer).map_err(|e| runtime(format!("writing {}: {e}", tmp.display())))?;
    use std::io::Write;
    writer.flush().map_err(|e| runtime(format!("flushing {}: {e}", tmp.display())))?;
    drop(writer);
    fs::rename(&tmp, &path).map_err(|e| runtime(format!("renaming to {}: {e}", path.display())))
}

fn write_meta(
    ctx: &Ctx,
    paths: &RunPaths,
    role: Role,
    hidden: usize,
    report: &TrainReport,
    extras: ModelExtras,
) -> Result<(), CliError> {
    let best = best_stats(report);
    let meta = ModelMeta {
        config_hash: ctx.hash.clone(),
        master_seed: ctx.config.seed,
        role: role.name().to_string(),
        hidden,
        epochs_run: report.epochs.len(),
        best_epoch: report.best_epoch,
        train_loss: best.map(|s| s.train_loss).unwrap_or(f64::NAN),
        valid_loss: extras.valid_loss,
        valid_accuracy: extras.valid_accuracy,
        generator_mode: extras.generator_mode,
        held_out_nll: extras.held_out_nll,
    };
    write_json(&paths.model_meta(role.name()), &meta)?;
    write_json(
        &paths.model_timing(role.name()),
        &Timing {
            wall_seconds: report.wall_seconds,
        },
    )
}
