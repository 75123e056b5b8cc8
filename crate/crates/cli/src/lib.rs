//! Experiment harness for scheduled denoising autoencoders: configuration,
//! training runs with metrics and checkpoints, evaluation, analysis, and
//! hyperparameter grids.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod data;
pub mod grid;
pub mod run;

/// Process exit status for a failed command: 2 for configuration
/// problems, 3 for unreadable or mismatched data, 4 when training produced
/// non-finite values, 1 for anything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<scheda_core::Error>() {
            return match e {
                scheda_core::Error::Config(_) | scheda_core::Error::Argument(_) => 2,
                scheda_core::Error::Format(_) | scheda_core::Error::Shape(_) => 3,
                scheda_core::Error::Numerical(_) => 4,
                scheda_core::Error::Io(_) => 1,
            };
        }
    }
    1
}
