//! Tied-weight denoising autoencoder: forward passes, losses, exact
//! gradients and minibatch SGD.

mod model;
mod params;
mod train;

pub use model::{
    cross_entropy, cross_entropy_logits, decode, encode, grad, reconstruction_loss, squared_error,
    DaeGrad, Loss,
};
pub use params::{init_radius, Architecture, DaeParams};
pub use train::{
    continue_da, sgd_epoch, train_da, TrainConfig, TrainOutcome, TrainStreams, DEFAULT_BATCH_SIZE,
};

pub(crate) use model::{decoder_preactivation, hidden_layer, output_loss, tied_backprop, Block};
pub(crate) use train::{epoch_batches, epoch_with_levels};
