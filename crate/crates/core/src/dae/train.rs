use crate::corruption::CorruptionKind;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

use super::model::{grad, Loss};
use super::{Architecture, DaeParams};

pub const DEFAULT_BATCH_SIZE: usize = 20;

/// Optimization settings for a single noise level.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub loss: Loss,
    pub corruption: CorruptionKind,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 100,
            batch_size: DEFAULT_BATCH_SIZE,
            loss: Loss::CrossEntropy,
            corruption: CorruptionKind::Masking(0.3),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Argument(format!(
                "learning rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Argument("batch size must be at least 1".into()));
        }
        self.corruption.validate()
    }

    pub fn with_level(&self, level: f64) -> Self {
        Self {
            corruption: self.corruption.with_level(level),
            ..self.clone()
        }
    }
}

// Substream ids under the run seed.
const STREAM_INIT: u64 = 0;
const STREAM_SHUFFLE: u64 = 1;
const STREAM_LEVEL: u64 = 2;
const STREAM_CORRUPT: u64 = 16;

/// Generators driving one training run, all derived from its seed.
///
/// Shuffling, per-minibatch level sampling and the corruption of each
/// encoder block draw from separate substreams, so for example sampling a
/// noise level never shifts the corruption masks.
#[derive(Clone, Debug)]
pub struct TrainStreams {
    seed: u64,
    pub(crate) shuffle: Rng,
    pub(crate) levels: Rng,
    pub(crate) corruption: Vec<Rng>,
}

impl TrainStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            shuffle: Rng::substream(seed, STREAM_SHUFFLE),
            levels: Rng::substream(seed, STREAM_LEVEL),
            corruption: Vec::new(),
        }
    }

    /// Generator used to initialize parameters for this seed.
    pub fn init_rng(seed: u64) -> Rng {
        Rng::substream(seed, STREAM_INIT)
    }

    pub(crate) fn corruption_stream(&mut self, block: usize) -> &mut Rng {
        while self.corruption.len() <= block {
            let id = STREAM_CORRUPT + self.corruption.len() as u64;
            self.corruption.push(Rng::substream(self.seed, id));
        }
        &mut self.corruption[block]
    }
}

/// Shuffled minibatch index lists for one epoch.
pub(crate) fn epoch_batches(n: usize, batch_size: usize, shuffle: &mut Rng) -> Result<Vec<Vec<usize>>> {
    if n == 0 {
        return Err(Error::Argument("empty dataset".into()));
    }
    if batch_size == 0 || batch_size > n {
        return Err(Error::Argument(format!(
            "batch size {batch_size} must be in 1..={n}"
        )));
    }
    let perm = shuffle.permutation(n);
    Ok(perm.chunks(batch_size).map(<[usize]>::to_vec).collect())
}

pub(crate) fn apply_update(p: &mut DaeParams, lr: f64, g: &super::DaeGrad) -> Result<()> {
    p.w.axpy(-lr, &g.w)?;
    for (v, d) in p.b.iter_mut().zip(&g.b) {
        *v -= lr * d;
    }
    for (v, d) in p.b_prime.iter_mut().zip(&g.b_prime) {
        *v -= lr * d;
    }
    Ok(())
}

/// One pass over `data` in shuffled minibatches with a level chosen per batch.
///
/// Returns the example-weighted mean loss on the corrupted minibatches,
/// each measured just before its update.
pub(crate) fn epoch_with_levels(
    p: &mut DaeParams,
    data: &Matrix,
    cfg: &TrainConfig,
    streams: &mut TrainStreams,
    mut level_for_batch: impl FnMut(&mut Rng) -> Result<CorruptionKind>,
) -> Result<f64> {
    cfg.validate()?;
    let batches = epoch_batches(data.rows(), cfg.batch_size, &mut streams.shuffle)?;
    let mut total = 0.0;
    for idx in batches {
        let x = data.select_rows(&idx);
        let kind = level_for_batch(&mut streams.levels)?;
        let x_tilde = kind.apply(&x, streams.corruption_stream(0))?;
        let (g, loss) = grad(p, &x, &x_tilde, cfg.loss)?;
        apply_update(p, cfg.learning_rate, &g)?;
        total += loss * idx.len() as f64;
    }
    let mean = total / data.rows() as f64;
    if !mean.is_finite() || !p.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite loss or parameters (loss = {mean})"
        )));
    }
    Ok(mean)
}

/// One epoch of minibatch SGD at `cfg.corruption`, updating `p` in place.
///
/// Every minibatch gets a fresh corruption. Returns the mean training loss
/// at that corruption level.
pub fn sgd_epoch(
    p: &mut DaeParams,
    data: &Matrix,
    cfg: &TrainConfig,
    streams: &mut TrainStreams,
) -> Result<f64> {
    let kind = cfg.corruption;
    epoch_with_levels(p, data, cfg, streams, |_| Ok(kind))
}

/// Parameters after training and the per-epoch mean loss.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: DaeParams,
    pub trace: Vec<f64>,
}

/// Initializes from `cfg.seed` and runs `cfg.epochs` epochs of [`sgd_epoch`].
pub fn train_da(data: &Matrix, arch: Architecture, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let init = DaeParams::init(data.cols(), arch, &mut TrainStreams::init_rng(cfg.seed));
    continue_da(data, init, cfg, &mut TrainStreams::new(cfg.seed))
}

/// Runs `cfg.epochs` epochs starting from `params` with existing streams.
pub fn continue_da(
    data: &Matrix,
    mut params: DaeParams,
    cfg: &TrainConfig,
    streams: &mut TrainStreams,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    cfg.loss.check_decoder(params.decoder)?;
    let mut trace = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        trace.push(sgd_epoch(&mut params, data, cfg, streams)?);
    }
    Ok(TrainOutcome { params, trace })
}
