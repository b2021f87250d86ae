//! `bench`: the whole sweep in one command. For every configured seed it
//! simulates, trains both models, and scores every method; then it runs the
//! cross-seed evaluation and prints the summary table.

use crate::error::{validation, CliError};
use crate::train::Role;
use crate::{evaluate, explain, simulate, train, Ctx};

pub fn run(ctx: &Ctx) -> Result<(), CliError> {
    let seeds = ctx.config.evaluate.seeds.clone();
    if seeds.is_empty() {
        return Err(validation(
            "evaluate.seeds is empty; configure at least one seed",
        ));
    }
    if ctx.config.methods.is_empty() {
        return Err(validation("no methods configured; add [[methods]] entries"));
    }
    let started = std::time::Instant::now();
    for (i, &seed) in seeds.iter().enumerate() {
        println!("== seed {seed} ({} of {}) ==", i + 1, seeds.len());
        let seeded = ctx.seeded(seed);
        simulate::run(&seeded)?;
        train::run(&seeded, Role::Predictor)?;
        train::run(&seeded, Role::Generator)?;
        explain::run(&seeded, None, None, None)?;
    }
    println!("== aggregate over {} seed(s) ==", seeds.len());
    evaluate::run(ctx)?;
    println!("bench: finished in {:.1}s", started.elapsed().as_secs_f64());
    Ok(())
}
