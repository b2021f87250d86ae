//! Two-way error split backing the exit-code contract: 1 for anything wrong
//! with the configuration or inputs, 2 for failures while computing.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config, missing or mismatched input artifacts.
    Validation(String),
    /// The pipeline itself failed: diverged training, write errors, ...
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) | CliError::Runtime(msg) => f.write_str(msg),
        }
    }
}

pub fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

pub fn runtime(msg: impl Into<String>) -> CliError {
    CliError::Runtime(msg.into())
}

/// Training errors: a diverging run is a compute failure, everything else the
/// trainer rejects is a bad setup.
pub fn from_training(err: tsexplain_core::seqmodels::ModelError) -> CliError {
    use tsexplain_core::seqmodels::ModelError;
    match err {
        ModelError::Diverged { .. } => runtime(format!("training failed: {err}")),
        ModelError::Io(_) => runtime(format!("training failed: {err}")),
        other => validation(format!("training setup rejected: {other}")),
    }
}
