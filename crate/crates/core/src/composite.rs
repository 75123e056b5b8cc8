//! Composite denoising autoencoder.
//!
//! Hidden units are split into partitions, each encoding its own
//! corruption of the input at its own noise level. Reconstruction sums the
//! tied decoders of all partitions plus one shared bias:
//!
//! ```text
//! y = [f(x̃₁ W₁ᵀ + b₁), …, f(x̃_S W_Sᵀ + b_S)]
//! z = g(Σ_s f(x̃_s W_sᵀ + b_s) W_s + b')
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::codec;
use crate::corruption::CorruptionKind;
use crate::dae::{
    decoder_preactivation, epoch_batches, hidden_layer, output_loss, tied_backprop, Architecture,
    Block, DaeParams, Loss, TrainConfig, TrainStreams,
};
use crate::error::{shape_err, Error, Result};
use crate::numerics::{Matrix, Rng, Transfer};

/// Default number of epochs before alternating training moves to the next partition.
pub const DEFAULT_PHASE_EPOCHS: usize = 50;

/// One block of hidden units and the noise level it is trained at.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    /// `width × input`.
    pub w: Matrix,
    pub b: Vec<f64>,
    pub level: f64,
}

impl Partition {
    pub fn width(&self) -> usize {
        self.w.rows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompositeParams {
    pub partitions: Vec<Partition>,
    pub b_prime: Vec<f64>,
    pub encoder: Transfer,
    pub decoder: Transfer,
}

impl CompositeParams {
    pub fn new(
        partitions: Vec<Partition>,
        b_prime: Vec<f64>,
        encoder: Transfer,
        decoder: Transfer,
    ) -> Result<Self> {
        let p = Self {
            partitions,
            b_prime,
            encoder,
            decoder,
        };
        p.check()?;
        Ok(p)
    }

    /// Partitions initialized in order from `rng`, each like
    /// [`DaeParams::init`] with its own width.
    pub fn init(
        input: usize,
        layout: &[(usize, f64)],
        encoder: Transfer,
        decoder: Transfer,
        rng: &mut Rng,
    ) -> Result<Self> {
        let partitions = layout
            .iter()
            .map(|&(hidden, level)| {
                let arch = Architecture {
                    hidden,
                    encoder,
                    decoder,
                };
                let p = DaeParams::init(input, arch, rng);
                Partition {
                    w: p.w,
                    b: p.b,
                    level,
                }
            })
            .collect();
        Self::new(partitions, vec![0.0; input], encoder, decoder)
    }

    /// A single-partition model sharing `p`'s parameters.
    pub fn from_dae(p: &DaeParams, level: f64) -> Self {
        Self {
            partitions: vec![Partition {
                w: p.w.clone(),
                b: p.b.clone(),
                level,
            }],
            b_prime: p.b_prime.clone(),
            encoder: p.encoder,
            decoder: p.decoder,
        }
    }

    fn check(&self) -> Result<()> {
        if self.partitions.is_empty() {
            return Err(Error::Argument("composite model needs at least one partition".into()));
        }
        let d = self.b_prime.len();
        for (s, part) in self.partitions.iter().enumerate() {
            if part.w.cols() != d || part.b.len() != part.w.rows() {
                return Err(Error::Shape(format!(
                    "partition {s}: W is {}x{}, b has {}, decoder bias has {d}",
                    part.w.rows(),
                    part.w.cols(),
                    part.b.len()
                )));
            }
            CorruptionKind::Masking(part.level).validate()?;
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.b_prime.len()
    }

    pub fn hidden_dim(&self) -> usize {
        self.partitions.iter().map(Partition::width).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.b_prime.iter().all(|v| v.is_finite())
            && self
                .partitions
                .iter()
                .all(|p| p.w.is_finite() && p.b.iter().all(|v| v.is_finite()))
    }

    /// Writes the `SDC1` checkpoint: magic, little-endian u64 input width,
    /// encoder code, decoder code and partition count, then per partition
    /// u64 width, f64 level, `W_s` row-major and `b_s`, then `b'`.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(b"SDC1")?;
        codec::write_u64(w, self.input_dim() as u64)?;
        codec::write_u64(w, self.encoder.code())?;
        codec::write_u64(w, self.decoder.code())?;
        codec::write_u64(w, self.partitions.len() as u64)?;
        for p in &self.partitions {
            codec::write_u64(w, p.width() as u64)?;
            codec::write_f64(w, p.level)?;
            codec::write_f64s(w, p.w.as_slice())?;
            codec::write_f64s(w, &p.b)?;
        }
        codec::write_f64s(w, &self.b_prime)
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        codec::read_magic(r, b"SDC1")?;
        let d = codec::read_usize(r, "input width")?;
        let encoder = Transfer::from_code(codec::read_u64(r)?)?;
        let decoder = Transfer::from_code(codec::read_u64(r)?)?;
        let s = codec::read_usize(r, "partition count")?;
        let mut partitions = Vec::with_capacity(s.min(1024));
        for _ in 0..s {
            let width = codec::read_usize(r, "partition width")?;
            let level = codec::read_f64(r)?;
            let w = codec::read_matrix(r, width, d)?;
            let b = codec::read_f64s(r, width)?;
            partitions.push(Partition { w, b, level });
        }
        let b_prime = codec::read_f64s(r, d)?;
        codec::expect_end(r)?;
        Self::new(partitions, b_prime, encoder, decoder)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::read_from(&mut bytes.as_slice())
    }
}

/// Per-partition encodings, one matrix per partition.
pub fn partition_hidden(p: &CompositeParams, views: &[Matrix]) -> Result<Vec<Matrix>> {
    if views.len() != p.partitions.len() {
        return Err(Error::Argument(format!(
            "expected {} corrupted views, got {}",
            p.partitions.len(),
            views.len()
        )));
    }
    p.partitions
        .iter()
        .zip(views)
        .map(|(part, x)| hidden_layer(&part.w, &part.b, p.encoder, x))
        .collect()
}

/// Concatenated hidden representation, partitions in order.
pub fn composite_encode(p: &CompositeParams, views: &[Matrix]) -> Result<Matrix> {
    let blocks = partition_hidden(p, views)?;
    let mut out = Matrix::zeros(views[0].rows(), 0);
    for h in &blocks {
        out = out.hcat(h)?;
    }
    Ok(out)
}

/// Encodes clean input through every partition.
pub fn composite_encode_clean(p: &CompositeParams, x: &Matrix) -> Result<Matrix> {
    let views = vec![x.clone(); p.partitions.len()];
    composite_encode(p, &views)
}

/// `g(Σ_s h_s W_s + b')`.
pub fn composite_decode(p: &CompositeParams, hidden: &[Matrix]) -> Result<Matrix> {
    if hidden.len() != p.partitions.len() {
        return Err(Error::Argument(format!(
            "expected {} hidden blocks, got {}",
            p.partitions.len(),
            hidden.len()
        )));
    }
    for (h, part) in hidden.iter().zip(&p.partitions) {
        if h.cols() != part.width() {
            return Err(shape_err("hidden block", h.shape(), part.w.shape()));
        }
    }
    let weights: Vec<&Matrix> = p.partitions.iter().map(|part| &part.w).collect();
    let mut z = decoder_preactivation(hidden, &weights, &p.b_prime)?;
    p.decoder.apply_inplace(&mut z);
    Ok(z)
}

/// Loss of reconstructing `x` from the given per-partition corrupted views.
pub fn composite_loss(p: &CompositeParams, x: &Matrix, views: &[Matrix], loss: Loss) -> Result<f64> {
    loss.check_decoder(p.decoder)?;
    let hidden = partition_hidden(p, views)?;
    let weights: Vec<&Matrix> = p.partitions.iter().map(|part| &part.w).collect();
    let a = decoder_preactivation(&hidden, &weights, &p.b_prime)?;
    output_loss(loss, p.decoder, x, &a)
}

/// Gradient with respect to every partition and the shared bias.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeGrad {
    pub partitions: Vec<(Matrix, Vec<f64>)>,
    pub b_prime: Vec<f64>,
}

pub fn composite_grad(
    p: &CompositeParams,
    x: &Matrix,
    views: &[Matrix],
    loss: Loss,
) -> Result<(CompositeGrad, f64)> {
    if views.len() != p.partitions.len() {
        return Err(Error::Argument(format!(
            "expected {} corrupted views, got {}",
            p.partitions.len(),
            views.len()
        )));
    }
    let blocks: Vec<Block<'_>> = p
        .partitions
        .iter()
        .zip(views)
        .map(|(part, v)| Block {
            w: &part.w,
            b: &part.b,
            input: v,
        })
        .collect();
    let (partitions, b_prime, value) =
        tied_backprop(&blocks, &p.b_prime, p.encoder, p.decoder, loss, x)?;
    Ok((
        CompositeGrad {
            partitions,
            b_prime,
        },
        value,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateMode {
    /// Every step updates all partitions.
    Joint,
    /// Only one partition's `(W_s, b_s)` moves at a time, cycling through
    /// partitions every `epochs_per_phase` epochs. `b'` is always updated.
    Alternating { epochs_per_phase: usize },
}

impl UpdateMode {
    /// Partition being trained during zero-based `epoch`, or `None` when all are.
    pub fn active_partition(self, epoch: usize, partitions: usize) -> Option<usize> {
        match self {
            UpdateMode::Joint => None,
            UpdateMode::Alternating { epochs_per_phase } => {
                Some((epoch / epochs_per_phase.max(1)) % partitions)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct CompositeOutcome {
    pub params: CompositeParams,
    pub trace: Vec<f64>,
}

/// Minibatch SGD for `cfg.epochs` epochs starting from `p`.
///
/// Each minibatch is corrupted once per partition, partition `s` at its
/// own level from its own substream. `cfg.corruption` fixes the noise family.
pub fn train_composite(
    data: &Matrix,
    p: CompositeParams,
    cfg: &TrainConfig,
    mode: UpdateMode,
) -> Result<CompositeOutcome> {
    let mut streams = TrainStreams::new(cfg.seed);
    let mut params = p;
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        trace.push(composite_epoch(&mut params, data, cfg, mode, epoch, &mut streams)?);
    }
    Ok(CompositeOutcome { params, trace })
}

/// One epoch of composite training; `epoch` selects the active partition.
pub fn composite_epoch(
    p: &mut CompositeParams,
    data: &Matrix,
    cfg: &TrainConfig,
    mode: UpdateMode,
    epoch: usize,
    streams: &mut TrainStreams,
) -> Result<f64> {
    cfg.validate()?;
    p.check()?;
    if let UpdateMode::Alternating { epochs_per_phase: 0 } = mode {
        return Err(Error::Argument("alternating phase length must be at least 1".into()));
    }
    if data.cols() != p.input_dim() {
        return Err(shape_err("training data", data.shape(), (p.hidden_dim(), p.input_dim())));
    }
    let active = mode.active_partition(epoch, p.partitions.len());
    let lr = cfg.learning_rate;
    let batches = epoch_batches(data.rows(), cfg.batch_size, &mut streams.shuffle)?;
    let mut total = 0.0;
    for idx in batches {
        let x = data.select_rows(&idx);
        let views = p
            .partitions
            .iter()
            .enumerate()
            .map(|(s, part)| {
                cfg.corruption
                    .with_level(part.level)
                    .apply(&x, streams.corruption_stream(s))
            })
            .collect::<Result<Vec<_>>>()?;
        let (g, loss) = composite_grad(p, &x, &views, cfg.loss)?;
        for (s, (part, (gw, gb))) in p.partitions.iter_mut().zip(&g.partitions).enumerate() {
            if active.is_some_and(|a| a != s) {
                continue;
            }
            part.w.axpy(-lr, gw)?;
            for (v, d) in part.b.iter_mut().zip(gb) {
                *v -= lr * d;
            }
        }
        for (v, d) in p.b_prime.iter_mut().zip(&g.b_prime) {
            *v -= lr * d;
        }
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dae::{decode, encode};

    fn two_partitions(rng: &mut Rng) -> CompositeParams {
        CompositeParams::init(5, &[(3, 0.2), (2, 0.4)], Transfer::Sigmoid, Transfer::Sigmoid, rng)
            .unwrap()
    }

    #[test]
    fn single_partition_matches_plain_autoencoder() {
        let mut rng = Rng::new(2);
        let dae = DaeParams::init(5, Architecture::sigmoid(3), &mut rng);
        let comp = CompositeParams::from_dae(&dae, 0.3);
        let x = Matrix::new(4, 5, rng.uniform(0.0, 1.0, 20).unwrap()).unwrap();
        let y = composite_encode(&comp, std::slice::from_ref(&x)).unwrap();
        assert_eq!(y, encode(&dae, &x).unwrap());
        assert_eq!(composite_decode(&comp, std::slice::from_ref(&y)).unwrap(), decode(&dae, &y).unwrap());
    }

    #[test]
    fn output_width_is_total_hidden() {
        let mut rng = Rng::new(3);
        let p = two_partitions(&mut rng);
        let x = Matrix::filled(2, 5, 0.5);
        let y = composite_encode(&p, &[x.clone(), x.clone()]).unwrap();
        assert_eq!(y.shape(), (2, 5));
        assert!(composite_encode(&p, &[x]).is_err());
    }

    #[test]
    fn zero_pre_activation_decodes_to_half() {
        let mut rng = Rng::new(4);
        let p = two_partitions(&mut rng);
        let hidden = vec![Matrix::zeros(3, 3), Matrix::zeros(3, 2)];
        let z = composite_decode(&p, &hidden).unwrap();
        assert!(z.as_slice().iter().all(|&v| v == 0.5));
        assert!(composite_decode(&p, &[Matrix::zeros(3, 2), Matrix::zeros(3, 3)]).is_err());
    }

    #[test]
    fn swapping_partitions_swaps_column_blocks() {
        let mut rng = Rng::new(5);
        let p = two_partitions(&mut rng);
        let mut q = p.clone();
        q.partitions.swap(0, 1);
        let x = Matrix::new(3, 5, rng.uniform(0.0, 1.0, 15).unwrap()).unwrap();
        let views = [x.clone(), x.clone()];
        let yp = composite_encode(&p, &views).unwrap();
        let yq = composite_encode(&q, &views).unwrap();
        assert_eq!(yp.column_block(0, 3), yq.column_block(2, 5));
        assert_eq!(yp.column_block(3, 5), yq.column_block(0, 2));
    }

    #[test]
    fn decode_matches_explicit_sum() {
        let mut rng = Rng::new(6);
        let p = two_partitions(&mut rng);
        let h0 = Matrix::new(2, 3, rng.uniform(0.0, 1.0, 6).unwrap()).unwrap();
        let h1 = Matrix::new(2, 2, rng.uniform(0.0, 1.0, 4).unwrap()).unwrap();
        let mut bp = p.clone();
        bp.b_prime = rng.uniform(-1.0, 1.0, 5).unwrap();
        let z = composite_decode(&bp, &[h0.clone(), h1.clone()]).unwrap();
        for n in 0..2 {
            for i in 0..5 {
                let mut a = bp.b_prime[i];
                for (h, part) in [(&h0, &bp.partitions[0]), (&h1, &bp.partitions[1])] {
                    for k in 0..part.width() {
                        a += h.get(n, k) * part.w.get(k, i);
                    }
                }
                let expect = 1.0 / (1.0 + (-a).exp());
                assert!((z.get(n, i) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = Rng::new(7);
        let p = two_partitions(&mut rng);
        let bytes = p.to_bytes();
        assert_eq!(&bytes[..4], b"SDC1");
        assert_eq!(CompositeParams::read_from(&mut bytes.as_slice()).unwrap(), p);
        assert!(CompositeParams::read_from(&mut &bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn active_partition_cycles() {
        let m = UpdateMode::Alternating { epochs_per_phase: 2 };
        let seq: Vec<_> = (0..6).map(|e| m.active_partition(e, 2).unwrap()).collect();
        assert_eq!(seq, vec![0, 0, 1, 1, 0, 0]);
        assert_eq!(UpdateMode::Joint.active_partition(3, 2), None);
    }
}
