//! Command-line front end for the KL-divergence feature-importance toolkit.
//!
//! One TOML config drives a reproducible pipeline: `simulate` writes the
//! synthetic benchmark, `train` fits the predictor and the counterfactual
//! generator, `explain` scores the test split, `evaluate` aggregates metrics
//! across seeds, `render` draws saliency panels, and `bench` chains all of it
//! over every configured seed.
//!
//! Setting precedence: config file < `--override KEY=VALUE` < dedicated
//! flags (`--seed`). The sha256 of the resolved config is embedded in every
//! artifact, and downstream stages refuse inputs whose hash differs unless
//! `--force` is passed. Since outputs are pure functions of (config, seed),
//! reruns are byte-identical; only `*.timing.json` sidecars may differ.
//!
//! Exit codes: 0 success, 1 bad configuration or inputs, 2 compute failure.

mod bench;
mod config;
mod error;
mod evaluate;
mod explain;
mod render;
mod run;
mod simulate;
mod train;

use clap::{Parser, Subcommand};
use config::ExperimentConfig;
use error::CliError;
use run::RunPaths;
use std::path::PathBuf;
use std::process::ExitCode;

/// Output root environment variable, lowest-precedence override of the
/// config's `out_dir`.
const OUT_ENV: &str = "TSEXPLAIN_OUT";

#[derive(Parser)]
#[command(
    name = "tsexplain",
    version,
    about = "Feature-importance pipeline for recurrent time-series predictors",
    after_help = "Precedence: config file < --override < dedicated flags. \
                  Output root: --out, then $TSEXPLAIN_OUT, then out_dir in the config, then ./out."
)]
struct Cli {
    /// Experiment config (TOML); built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed; overrides the config file.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,

    /// Output root directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Set one config field by dotted path, e.g. dataset.num_steps=40.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Proceed despite config-hash mismatches with existing artifacts.
    #[arg(long, global = true)]
    force: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic benchmark and write the train/test split.
    Simulate,
    /// Train the predictor or the counterfactual generator.
    Train {
        /// Which model to fit.
        #[arg(long, value_enum)]
        role: train::Role,
    },
    /// Score the test split with the configured methods.
    Explain {
        /// Single method to run (fit, ifit, winit, fo, afo); default: all
        /// configured methods.
        #[arg(long, value_name = "NAME")]
        method: Option<String>,
        /// Window length N (WinIT).
        #[arg(long, value_name = "INT")]
        window: Option<usize>,
        /// Monte Carlo draws L per counterfactual expectation.
        #[arg(long, value_name = "INT")]
        samples: Option<usize>,
    },
    /// Aggregate rankings, masking degradation, and runtimes across seeds.
    Evaluate,
    /// Draw one test sample as aligned data/label/score panels.
    Render {
        /// Sample id, e.g. s00042.
        #[arg(long, value_name = "ID")]
        sample: String,
    },
    /// Run the full sweep: simulate, train, explain for every seed, then
    /// evaluate.
    Bench,
}

/// Everything a subcommand needs: the resolved config, its hash, and where
/// outputs live.
pub struct Ctx {
    pub config: ExperimentConfig,
    pub hash: String,
    pub out_root: PathBuf,
    pub force: bool,
}

impl Ctx {
    /// This run's seed directory.
    pub fn paths(&self) -> RunPaths {
        RunPaths::new(&self.out_root, self.config.seed)
    }

    /// The same experiment under another master seed, re-hashed.
    pub fn seeded(&self, seed: u64) -> Ctx {
        let mut config = self.config.clone();
        config.seed = seed;
        let hash = config.content_hash();
        Ctx {
            config,
            hash,
            out_root: self.out_root.clone(),
            force: self.force,
        }
    }

    /// Config and hash under another master seed, without cloning the paths.
    pub fn with_seed(&self, seed: u64) -> (ExperimentConfig, String) {
        let mut config = self.config.clone();
        config.seed = seed;
        let hash = config.content_hash();
        (config, hash)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            // Unusable flags are a validation problem, exit code 1.
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let config = config::load(cli.config.as_deref(), &cli.overrides, cli.seed)?;
    let out_root = cli
        .out
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let hash = config.content_hash();
    let ctx = Ctx {
        config,
        hash,
        out_root,
        force: cli.force,
    };
    match cli.command {
        Command::Simulate => simulate::run(&ctx),
        Command::Train { role } => train::run(&ctx, role),
        Command::Explain {
            method,
            window,
            samples,
        } => explain::run(&ctx, method.as_deref(), window, samples),
        Command::Evaluate => evaluate::run(&ctx),
        Command::Render { sample } => render::run(&ctx, &sample),
        Command::Bench => bench::run(&ctx),
    }
}
