use crate::dae::{epoch_batches, hidden_layer, DaeParams};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng, Transfer};

use super::dataset::{LabeledDataset, Part};
use super::logreg::argmax;

/// Learning rates tried for fine-tuning, `0.00125 · 2^-k` for `k = 0..=4`.
pub fn default_finetune_rates() -> Vec<f64> {
    (0..=4).map(|k| 0.00125 * 2f64.powi(-k)).collect()
}

/// One sigmoid (or rectifier) hidden layer followed by a softmax output.
#[derive(Clone, Debug, PartialEq)]
pub struct FinetuneNetwork {
    /// `hidden × input`, initialized from the encoder.
    pub w: Matrix,
    pub b: Vec<f64>,
    pub encoder: Transfer,
    /// `classes × hidden`.
    pub out_w: Matrix,
    pub out_b: Vec<f64>,
}

impl FinetuneNetwork {
    /// Hidden layer copied from `p`; output weights uniform in `±init_scale`.
    pub fn from_encoder(p: &DaeParams, classes: usize, init_scale: f64, rng: &mut Rng) -> Result<Self> {
        let h = p.hidden_dim();
        let out = rng.uniform(-init_scale, init_scale, classes * h)?;
        Ok(Self {
            w: p.w.clone(),
            b: p.b.clone(),
            encoder: p.encoder,
            out_w: Matrix::new(classes, h, out)?,
            out_b: vec![0.0; classes],
        })
    }

    pub fn classes(&self) -> usize {
        self.out_w.rows()
    }

    fn forward(&self, x: &Matrix) -> Result<(Matrix, Matrix)> {
        let h = hidden_layer(&self.w, &self.b, self.encoder, x)?;
        let mut s = h.matmul_t(&self.out_w)?;
        s.add_row_vector(&self.out_b)?;
        Ok((h, s))
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        Ok(self.forward(x)?.1.iter_rows().map(argmax).collect())
    }

    pub fn error_rate(&self, x: &Matrix, labels: &[usize]) -> Result<f64> {
        if labels.is_empty() || labels.len() != x.rows() {
            return Err(Error::Shape(format!(
                "{} labels for {} rows",
                labels.len(),
                x.rows()
            )));
        }
        let wrong = self
            .predict(x)?
            .iter()
            .zip(labels)
            .filter(|(p, l)| p != l)
            .count();
        Ok(wrong as f64 / labels.len() as f64)
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite()
            && self.out_w.is_finite()
            && self.b.iter().chain(&self.out_b).all(|v| v.is_finite())
    }
}

/// Gradient of the mean softmax cross-entropy.
#[derive(Clone, Debug, PartialEq)]
pub struct FinetuneGrad {
    pub w: Matrix,
    pub b: Vec<f64>,
    pub out_w: Matrix,
    pub out_b: Vec<f64>,
}

/// Mean cross-entropy over labels and its gradient.
pub fn finetune_grad(net: &FinetuneNetwork, x: &Matrix, labels: &[usize]) -> Result<(FinetuneGrad, f64)> {
    if labels.len() != x.rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} rows",
            labels.len(),
            x.rows()
        )));
    }
    let classes = net.classes();
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::Argument(format!("label {bad} outside 0..{classes}")));
    }
    let (h, mut s) = net.forward(x)?;
    let n = x.rows().max(1) as f64;
    let mut loss = 0.0;
    for (i, row) in s.as_mut_slice().chunks_exact_mut(classes).enumerate() {
        let m = row.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let y = labels[i];
        loss += lse - row[y];
        for (k, v) in row.iter_mut().enumerate() {
            *v = ((*v - lse).exp() - if k == y { 1.0 } else { 0.0 }) / n;
        }
    }
    let out_w = s.t_matmul(&h)?;
    let out_b = s.column_sums();
    let mut dh = s.matmul(&net.out_w)?;
    for (g, &hv) in dh.as_mut_slice().iter_mut().zip(h.as_slice()) {
        *g *= net.encoder.derivative_from_output(hv);
    }
    let w = dh.t_matmul(x)?;
    let b = dh.column_sums();
    Ok((FinetuneGrad { w, b, out_w, out_b }, loss / n))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FinetuneConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Keep the hidden layer fixed and train only the softmax layer.
    pub freeze_hidden: bool,
    pub output_init_scale: f64,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.00125,
            epochs: 100,
            batch_size: 20,
            seed: 0,
            freeze_hidden: false,
            output_init_scale: 1e-3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FinetuneOutcome {
    /// Network after the last epoch.
    pub network: FinetuneNetwork,
    /// Network at the epoch with the lowest validation error (epoch 0 is
    /// the initialization).
    pub best: FinetuneNetwork,
    pub best_epoch: usize,
    pub train_loss: Vec<f64>,
    /// Validation error after every epoch.
    pub valid_error: Vec<f64>,
}

/// Supervised minibatch SGD on the training split, starting from the
/// encoder, with validation error recorded after every epoch.
pub fn finetune(p: &DaeParams, data: &LabeledDataset, cfg: &FinetuneConfig) -> Result<FinetuneOutcome> {
    if data.dim() != p.input_dim() {
        return Err(Error::Shape(format!(
            "encoder expects {} inputs, dataset has {}",
            p.input_dim(),
            data.dim()
        )));
    }
    if !(cfg.learning_rate >= 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::Argument(format!("bad learning rate {}", cfg.learning_rate)));
    }
    let mut init_rng = Rng::substream(cfg.seed, 0);
    let mut shuffle = Rng::substream(cfg.seed, 1);
    let mut net = FinetuneNetwork::from_encoder(p, data.classes, cfg.output_init_scale, &mut init_rng)?;
    let tx = data.features_of(Part::Train);
    let ty = data.labels_of(Part::Train);
    let vx = data.features_of(Part::Valid);
    let vy = data.labels_of(Part::Valid);
    let have_valid = !vy.is_empty();

    let mut best = net.clone();
    let mut best_epoch = 0;
    let mut best_err = if have_valid { net.error_rate(&vx, &vy)? } else { f64::INFINITY };
    let mut train_loss = Vec::with_capacity(cfg.epochs);
    let mut valid_error = Vec::with_capacity(cfg.epochs);
    let lr = cfg.learning_rate;
    for epoch in 1..=cfg.epochs {
        let mut total = 0.0;
        for idx in epoch_batches(tx.rows(), cfg.batch_size.min(tx.rows()).max(1), &mut shuffle)? {
            let x = tx.select_rows(&idx);
            let y: Vec<usize> = idx.iter().map(|&i| ty[i]).collect();
            let (g, loss) = finetune_grad(&net, &x, &y)?;
            net.out_w.axpy(-lr, &g.out_w)?;
            net.out_b.iter_mut().zip(&g.out_b).for_each(|(v, d)| *v -= lr * d);
            if !cfg.freeze_hidden {
                net.w.axpy(-lr, &g.w)?;
                net.b.iter_mut().zip(&g.b).for_each(|(v, d)| *v -= lr * d);
            }
            total += loss * idx.len() as f64;
        }
        if !net.is_finite() {
            return Err(Error::Numerical(format!("fine-tuning diverged at epoch {epoch}")));
        }
        train_loss.push(total / tx.rows() as f64);
        if have_valid {
            let err = net.error_rate(&vx, &vy)?;
            valid_error.push(err);
            if err < best_err {
                best_err = err;
                best = net.clone();
                best_epoch = epoch;
            }
        }
    }
    if !have_valid {
        best = net.clone();
        best_epoch = cfg.epochs;
    }
    Ok(FinetuneOutcome {
        network: net,
        best,
        best_epoch,
        train_loss,
        valid_error,
    })
}
