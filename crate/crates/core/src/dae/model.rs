use crate::error::{shape_err, Error, Result};
use crate::numerics::{softplus, Matrix, Transfer};

use super::DaeParams;

/// Reconstruction loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Loss {
    CrossEntropy,
    SquaredError,
}

impl Loss {
    /// Cross-entropy is only defined against a sigmoid reconstruction.
    pub fn check_decoder(self, decoder: Transfer) -> Result<()> {
        match (self, decoder) {
            (Loss::CrossEntropy, Transfer::Sigmoid) | (Loss::SquaredError, _) => Ok(()),
            (Loss::CrossEntropy, other) => Err(Error::Config(format!(
                "cross-entropy loss needs a sigmoid decoder, got {}",
                other.name()
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Loss::CrossEntropy => "cross-entropy",
            Loss::SquaredError => "squared-error",
        }
    }
}

impl std::str::FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cross-entropy" | "cross_entropy" | "ce" => Ok(Loss::CrossEntropy),
            "squared-error" | "squared_error" | "se" | "mse" => Ok(Loss::SquaredError),
            other => Err(Error::Config(format!("unknown loss `{other}`"))),
        }
    }
}

/// Gradient of the minibatch loss, shaped like [`DaeParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct DaeGrad {
    pub w: Matrix,
    pub b: Vec<f64>,
    pub b_prime: Vec<f64>,
}

/// `s(x · Wᵀ + b)`.
pub fn encode(p: &DaeParams, x: &Matrix) -> Result<Matrix> {
    hidden_layer(&p.w, &p.b, p.encoder, x)
}

/// `t(y · W + b')`.
pub fn decode(p: &DaeParams, y: &Matrix) -> Result<Matrix> {
    if y.cols() != p.hidden_dim() {
        return Err(shape_err("decode input", y.shape(), p.w.shape()));
    }
    let mut z = y.matmul(&p.w)?;
    z.add_row_vector(&p.b_prime)?;
    p.decoder.apply_inplace(&mut z);
    Ok(z)
}

/// Mean over rows of `-Σ [x log z + (1-x) log(1-z)]`.
pub fn cross_entropy(x: &Matrix, z: &Matrix) -> Result<f64> {
    if x.shape() != z.shape() {
        return Err(shape_err("cross-entropy", x.shape(), z.shape()));
    }
    let total: f64 = x
        .as_slice()
        .iter()
        .zip(z.as_slice())
        .map(|(&xi, &zi)| {
            let mut l = 0.0;
            // 0·log 0 is taken as 0 so saturated reconstructions of exact
            // binary targets stay finite.
            if xi != 0.0 {
                l -= xi * zi.ln();
            }
            if xi != 1.0 {
                l -= (1.0 - xi) * (1.0 - zi).ln();
            }
            l
        })
        .sum();
    Ok(total / x.rows().max(1) as f64)
}

/// Cross-entropy evaluated from decoder pre-activations `a`, where `z = sigmoid(a)`.
///
/// Uses `softplus(a) - x·a`, which never takes the log of a rounded probability.
pub fn cross_entropy_logits(x: &Matrix, a: &Matrix) -> Result<f64> {
    if x.shape() != a.shape() {
        return Err(shape_err("cross-entropy", x.shape(), a.shape()));
    }
    let total: f64 = x
        .as_slice()
        .iter()
        .zip(a.as_slice())
        .map(|(&xi, &ai)| softplus(ai) - xi * ai)
        .sum();
    Ok(total / x.rows().max(1) as f64)
}

/// Mean over rows of `Σ (x - z)²`.
pub fn squared_error(x: &Matrix, z: &Matrix) -> Result<f64> {
    if x.shape() != z.shape() {
        return Err(shape_err("squared error", x.shape(), z.shape()));
    }
    let total: f64 = x
        .as_slice()
        .iter()
        .zip(z.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(total / x.rows().max(1) as f64)
}

/// Loss of reconstructing `x` from its corruption `x_tilde`.
pub fn reconstruction_loss(p: &DaeParams, x: &Matrix, x_tilde: &Matrix, loss: Loss) -> Result<f64> {
    loss.check_decoder(p.decoder)?;
    let h = encode(p, x_tilde)?;
    let mut a = h.matmul(&p.w)?;
    a.add_row_vector(&p.b_prime)?;
    output_loss(loss, p.decoder, x, &a)
}

/// Exact gradient of the minibatch loss `L(x, g(f(x̃)))`, plus the loss itself.
///
/// The tied `W` collects a decoder term `hᵀ δ_out` and an encoder term
/// `δ_hiddenᵀ x̃`.
pub fn grad(p: &DaeParams, x: &Matrix, x_tilde: &Matrix, loss: Loss) -> Result<(DaeGrad, f64)> {
    let blocks = [Block {
        w: &p.w,
        b: &p.b,
        input: x_tilde,
    }];
    let (mut grads, b_prime, value) = tied_backprop(&blocks, &p.b_prime, p.encoder, p.decoder, loss, x)?;
    let (w, b) = grads.pop().expect("one block");
    Ok((DaeGrad { w, b, b_prime }, value))
}

/// One tied-weight encoder block feeding a shared decoder.
pub(crate) struct Block<'a> {
    pub w: &'a Matrix,
    pub b: &'a [f64],
    pub input: &'a Matrix,
}

pub(crate) fn hidden_layer(w: &Matrix, b: &[f64], f: Transfer, x: &Matrix) -> Result<Matrix> {
    if x.cols() != w.cols() {
        return Err(shape_err("encoder input", x.shape(), w.shape()));
    }
    let mut h = x.matmul_t(w)?;
    h.add_row_vector(b)?;
    f.apply_inplace(&mut h);
    Ok(h)
}

/// Decoder pre-activation `Σ_s h_s · W_s + b'`, accumulated in block order.
pub(crate) fn decoder_preactivation(
    hidden: &[Matrix],
    weights: &[&Matrix],
    b_prime: &[f64],
) -> Result<Matrix> {
    let mut acc: Option<Matrix> = None;
    for (h, w) in hidden.iter().zip(weights) {
        if h.cols() != w.rows() {
            return Err(shape_err("decoder block", h.shape(), w.shape()));
        }
        let term = h.matmul(w)?;
        acc = Some(match acc {
            None => term,
            Some(mut a) => {
                a.axpy(1.0, &term)?;
                a
            }
        });
    }
    let mut a = acc.ok_or_else(|| Error::Argument("no encoder blocks".into()))?;
    a.add_row_vector(b_prime)?;
    Ok(a)
}

pub(crate) fn output_loss(loss: Loss, decoder: Transfer, x: &Matrix, a: &Matrix) -> Result<f64> {
    match loss {
        Loss::CrossEntropy => cross_entropy_logits(x, a),
        Loss::SquaredError => squared_error(x, &decoder.apply_matrix(a)),
    }
}

/// `∂L/∂a` for decoder pre-activation `a`, already divided by the batch size.
fn output_delta(loss: Loss, decoder: Transfer, x: &Matrix, a: &Matrix) -> Matrix {
    let inv_n = 1.0 / x.rows().max(1) as f64;
    let mut delta = decoder.apply_matrix(a);
    for (d, &xi) in delta.as_mut_slice().iter_mut().zip(x.as_slice()) {
        let z = *d;
        *d = match loss {
            // Fused sigmoid/cross-entropy residual.
            Loss::CrossEntropy => (z - xi) * inv_n,
            Loss::SquaredError => 2.0 * (z - xi) * decoder.derivative_from_output(z) * inv_n,
        };
    }
    delta
}

/// Per-block `(∂W, ∂b)`, then `∂b'`, then the loss.
type TiedGradients = (Vec<(Matrix, Vec<f64>)>, Vec<f64>, f64);

/// Forward and backward pass through tied blocks sharing one decoder bias.
pub(crate) fn tied_backprop(
    blocks: &[Block<'_>],
    b_prime: &[f64],
    encoder: Transfer,
    decoder: Transfer,
    loss: Loss,
    x: &Matrix,
) -> Result<TiedGradients> {
    loss.check_decoder(decoder)?;
    for blk in blocks {
        if blk.input.shape() != x.shape() {
            return Err(shape_err("corrupted input", blk.input.shape(), x.shape()));
        }
    }
    let hidden = blocks
        .iter()
        .map(|blk| hidden_layer(blk.w, blk.b, encoder, blk.input))
        .collect::<Result<Vec<_>>>()?;
    let weights: Vec<&Matrix> = blocks.iter().map(|blk| blk.w).collect();
    let a = decoder_preactivation(&hidden, &weights, b_prime)?;
    let value = output_loss(loss, decoder, x, &a)?;
    let delta = output_delta(loss, decoder, x, &a);
    let grad_b_prime = delta.column_sums();

    let mut grads = Vec::with_capacity(blocks.len());
    for (blk, h) in blocks.iter().zip(&hidden) {
        // Decoder path: a = h·W.
        let mut gw = h.t_matmul(&delta)?;
        // Encoder path: h = f(x̃·Wᵀ + b).
        let mut dh = delta.matmul_t(blk.w)?;
        for (g, &hv) in dh.as_mut_slice().iter_mut().zip(h.as_slice()) {
            *g *= encoder.derivative_from_output(hv);
        }
        gw.axpy(1.0, &dh.t_matmul(blk.input)?)?;
        grads.push((gw, dh.column_sums()));
    }
    Ok((grads, grad_b_prime, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dae::Architecture;
    use crate::numerics::Rng;

    fn scalar_params(w: f64, b: f64, bp: f64) -> DaeParams {
        DaeParams::new(
            Matrix::from_rows(&[vec![w]]).unwrap(),
            vec![b],
            vec![bp],
            Transfer::Sigmoid,
            Transfer::Sigmoid,
        )
        .unwrap()
    }

    #[test]
    fn zero_parameters_give_half() {
        let p = DaeParams::zeros(5, Architecture::sigmoid(3));
        let x = Matrix::filled(4, 5, 0.7);
        let y = encode(&p, &x).unwrap();
        assert_eq!(y.shape(), (4, 3));
        assert!(y.as_slice().iter().all(|&v| v == 0.5));
        let z = decode(&p, &y).unwrap();
        assert_eq!(z.shape(), x.shape());
        assert!(z.as_slice().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn scalar_encode_decode() {
        let p = scalar_params(1.0, 0.0, 0.0);
        let y = encode(&p, &Matrix::row_vector(&[1.0])).unwrap();
        assert!((y.get(0, 0) - 0.7310585786).abs() < 1e-10);
        let p = scalar_params(2.0, 0.0, -1.0);
        let z = decode(&p, &Matrix::row_vector(&[0.5])).unwrap();
        assert_eq!(z.get(0, 0), 0.5);
    }

    #[test]
    fn shape_errors() {
        let p = DaeParams::zeros(5, Architecture::sigmoid(3));
        assert!(matches!(encode(&p, &Matrix::zeros(2, 4)), Err(Error::Shape(_))));
        assert!(matches!(decode(&p, &Matrix::zeros(2, 5)), Err(Error::Shape(_))));
        assert!(squared_error(&Matrix::zeros(1, 2), &Matrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn cross_entropy_closed_forms() {
        let d = 7;
        let x = Matrix::filled(1, d, 1.0);
        let z = Matrix::filled(1, d, 0.5);
        let expected = d as f64 * std::f64::consts::LN_2;
        assert!((cross_entropy(&x, &z).unwrap() - expected).abs() < 1e-12);
        // Logit path at a = 0.
        let a = Matrix::zeros(1, d);
        assert!((cross_entropy_logits(&x, &a).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_flip_symmetry_and_limit() {
        let mut rng = Rng::new(5);
        let x = Matrix::new(3, 4, rng.uniform(0.0, 1.0, 12).unwrap()).unwrap();
        let z = Matrix::new(3, 4, rng.uniform(0.01, 0.99, 12).unwrap()).unwrap();
        let l = cross_entropy(&x, &z).unwrap();
        let lf = cross_entropy(&x.map(|v| 1.0 - v), &z.map(|v| 1.0 - v)).unwrap();
        assert!((l - lf).abs() < 1e-12);
        assert!(l >= 0.0);

        let xb = Matrix::row_vector(&[1.0, 0.0, 1.0]);
        let near = xb.map(|v| if v == 1.0 { 1.0 - 1e-12 } else { 1e-12 });
        assert!(cross_entropy(&xb, &near).unwrap() < 1e-10);
    }

    #[test]
    fn squared_error_cases() {
        let x = Matrix::row_vector(&[1.0, 0.0]);
        assert_eq!(squared_error(&x, &x).unwrap(), 0.0);
        assert_eq!(squared_error(&x, &Matrix::row_vector(&[0.0, 1.0])).unwrap(), 2.0);

        let mut rng = Rng::new(8);
        let a = Matrix::new(3, 4, rng.uniform(-1.0, 1.0, 12).unwrap()).unwrap();
        let b = Matrix::new(3, 4, rng.uniform(-1.0, 1.0, 12).unwrap()).unwrap();
        let mut oracle = 0.0;
        for i in 0..3 {
            for j in 0..4 {
                oracle += (a.get(i, j) - b.get(i, j)).powi(2);
            }
        }
        assert!((squared_error(&a, &b).unwrap() - oracle / 3.0).abs() < 1e-12);
    }

    #[test]
    fn decoder_bias_gradient_is_mean_residual() {
        let mut rng = Rng::new(3);
        let p = DaeParams::init(6, Architecture::sigmoid(4), &mut rng);
        let x = Matrix::new(3, 6, rng.uniform(0.0, 1.0, 18).unwrap()).unwrap();
        let (g, _) = grad(&p, &x, &x, Loss::CrossEntropy).unwrap();
        let z = decode(&p, &encode(&p, &x).unwrap()).unwrap();
        for j in 0..6 {
            let mean: f64 = (0..3).map(|i| z.get(i, j) - x.get(i, j)).sum::<f64>() / 3.0;
            assert!((g.b_prime[j] - mean).abs() < 1e-14);
        }
        // With targets equal to the reconstruction the residual vanishes.
        let (g, _) = grad(&p, &z, &x, Loss::CrossEntropy).unwrap();
        assert!(g.b_prime.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn duplicated_batch_leaves_gradient_unchanged() {
        let mut rng = Rng::new(4);
        let p = DaeParams::init(6, Architecture::sigmoid(4), &mut rng);
        let x = Matrix::new(3, 6, rng.uniform(0.0, 1.0, 18).unwrap()).unwrap();
        let xt = x.map(|v| v * 0.5);
        let dup = x.select_rows(&[0, 1, 2, 0, 1, 2]);
        let dupt = xt.select_rows(&[0, 1, 2, 0, 1, 2]);
        let (g1, l1) = grad(&p, &x, &xt, Loss::CrossEntropy).unwrap();
        let (g2, l2) = grad(&p, &dup, &dupt, Loss::CrossEntropy).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        for (a, b) in g1.w.as_slice().iter().zip(g2.w.as_slice()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn cross_entropy_needs_sigmoid_decoder() {
        let mut p = DaeParams::zeros(3, Architecture::sigmoid(2));
        p.decoder = Transfer::Linear;
        let x = Matrix::zeros(1, 3);
        assert!(matches!(grad(&p, &x, &x, Loss::CrossEntropy), Err(Error::Config(_))));
        assert!(grad(&p, &x, &x, Loss::SquaredError).is_ok());
    }

    #[test]
    fn weights_are_tied() {
        // Perturbing W moves both the encoding and the decoding.
        let mut rng = Rng::new(6);
        let p = DaeParams::init(4, Architecture::sigmoid(3), &mut rng);
        let x = Matrix::filled(1, 4, 0.5);
        let y = Matrix::filled(1, 3, 0.5);
        let mut q = p.clone();
        q.w.set(1, 2, q.w.get(1, 2) + 0.25);
        assert_ne!(encode(&p, &x).unwrap().row(0)[1], encode(&q, &x).unwrap().row(0)[1]);
        assert_ne!(decode(&p, &y).unwrap().row(0)[2], decode(&q, &y).unwrap().row(0)[2]);
    }
}
