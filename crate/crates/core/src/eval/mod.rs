//! Representation quality: feature extraction and concatenation,
//! L2-regularized multinomial logistic regression, model selection on
//! validation error, and supervised fine-tuning.

mod dataset;
mod finetune;
mod logreg;
mod representation;
mod select;

pub use dataset::{LabeledDataset, Part, Split};
pub use finetune::{
    default_finetune_rates, finetune, finetune_grad, FinetuneConfig, FinetuneGrad, FinetuneNetwork,
    FinetuneOutcome,
};
pub use logreg::{
    default_lambda_grid, error_rate, train_logreg, train_logreg_with, LinearClassifier,
    LogregOptions,
};
pub use representation::{concat, evaluate_representation, extract, Encoder, EvalReport};
pub use select::{select_lambda, select_model, LambdaSelection};
