use std::collections::VecDeque;
use std::io::{Read, Write};
use std::path::Path;

use crate::codec;
use crate::error::{shape_err, Error, Result};
use crate::numerics::Matrix;

/// Default regularization grid, `10^k` for `k = -6..=2`.
pub fn default_lambda_grid() -> Vec<f64> {
    (-6..=2).map(|k| 10f64.powi(k)).collect()
}

/// Multinomial logistic regression.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearClassifier {
    /// `classes × features`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub lambda: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogregOptions {
    /// Stop once the Euclidean norm of the full gradient falls below this.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// L-BFGS history length.
    pub memory: usize,
}

impl Default for LogregOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-5,
            max_iter: 2000,
            memory: 10,
        }
    }
}

impl LinearClassifier {
    pub fn classes(&self) -> usize {
        self.weights.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    /// Class scores, one row per example.
    pub fn scores(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.input_dim() {
            return Err(shape_err("classifier input", features.shape(), self.weights.shape()));
        }
        let mut s = features.matmul_t(&self.weights)?;
        s.add_row_vector(&self.bias)?;
        Ok(s)
    }

    /// Argmax class per row, ties to the lowest index.
    pub fn predict(&self, features: &Matrix) -> Result<Vec<usize>> {
        Ok(self.scores(features)?.iter_rows().map(argmax).collect())
    }

    /// Regularized mean negative log-likelihood.
    pub fn objective(&self, features: &Matrix, labels: &[usize]) -> Result<f64> {
        let problem = Problem::new(features, labels, self.classes(), self.lambda)?;
        let theta = pack(&self.weights, &self.bias);
        Ok(problem.value_and_grad(&theta).0)
    }

    /// Writes the `SLR1` checkpoint: magic, little-endian u64 classes and
    /// feature width, f64 lambda, then weights row-major and bias.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(b"SLR1")?;
        codec::write_u64(w, self.classes() as u64)?;
        codec::write_u64(w, self.input_dim() as u64)?;
        codec::write_f64(w, self.lambda)?;
        codec::write_f64s(w, self.weights.as_slice())?;
        codec::write_f64s(w, &self.bias)
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        codec::read_magic(r, b"SLR1")?;
        let c = codec::read_usize(r, "class count")?;
        let d = codec::read_usize(r, "feature width")?;
        let lambda = codec::read_f64(r)?;
        let weights = codec::read_matrix(r, c, d)?;
        let bias = codec::read_f64s(r, c)?;
        codec::expect_end(r)?;
        Ok(Self {
            weights,
            bias,
            lambda,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::read_from(&mut bytes.as_slice())
    }
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = k;
        }
    }
    best
}

/// Fraction of rows whose argmax prediction differs from the label.
pub fn error_rate(clf: &LinearClassifier, features: &Matrix, labels: &[usize]) -> Result<f64> {
    if labels.len() != features.rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} rows",
            labels.len(),
            features.rows()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Argument("error rate of an empty set".into()));
    }
    let wrong = clf
        .predict(features)?
        .iter()
        .zip(labels)
        .filter(|(p, l)| p != l)
        .count();
    Ok(wrong as f64 / labels.len() as f64)
}

/// Fits multinomial logistic regression with penalty `(λ/2)‖W‖²` (bias
/// unpenalized), classes inferred as `max label + 1`.
pub fn train_logreg(features: &Matrix, labels: &[usize], lambda: f64) -> Result<LinearClassifier> {
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    train_logreg_with(features, labels, classes, lambda, &LogregOptions::default())
}

/// Full-batch L-BFGS with Armijo backtracking, started from zero weights.
pub fn train_logreg_with(
    features: &Matrix,
    labels: &[usize],
    classes: usize,
    lambda: f64,
    opts: &LogregOptions,
) -> Result<LinearClassifier> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Argument(format!("lambda must be > 0, got {lambda}")));
    }
    let problem = Problem::new(features, labels, classes, lambda)?;
    let mut present = vec![false; classes];
    for &l in labels {
        present[l] = true;
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::Argument(
            "training labels contain fewer than two classes".into(),
        ));
    }
    let theta = lbfgs(&problem, vec![0.0; classes * (features.cols() + 1)], opts);
    let (weights, bias) = unpack(&theta, classes, features.cols());
    Ok(LinearClassifier {
        weights,
        bias,
        lambda,
    })
}

struct Problem<'a> {
    x: &'a Matrix,
    labels: &'a [usize],
    classes: usize,
    lambda: f64,
}

fn pack(w: &Matrix, b: &[f64]) -> Vec<f64> {
    let mut v = w.as_slice().to_vec();
    v.extend_from_slice(b);
    v
}

fn unpack(theta: &[f64], classes: usize, dim: usize) -> (Matrix, Vec<f64>) {
    let split = classes * dim;
    (
        Matrix::new(classes, dim, theta[..split].to_vec()).expect("sized"),
        theta[split..].to_vec(),
    )
}

impl<'a> Problem<'a> {
    fn new(x: &'a Matrix, labels: &'a [usize], classes: usize, lambda: f64) -> Result<Self> {
        if labels.len() != x.rows() {
            return Err(Error::Shape(format!(
                "{} labels for {} rows",
                labels.len(),
                x.rows()
            )));
        }
        if x.rows() == 0 {
            return Err(Error::Argument("no training examples".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::Argument(format!("label {bad} outside 0..{classes}")));
        }
        Ok(Self {
            x,
            labels,
            classes,
            lambda,
        })
    }

    fn value_and_grad(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let (w, b) = unpack(theta, self.classes, self.x.cols());
        let mut s = self.x.matmul_t(&w).expect("shapes checked");
        s.add_row_vector(&b).expect("shapes checked");
        let n = self.x.rows() as f64;
        let mut nll = 0.0;
        // s becomes (softmax - onehot) / n.
        for (i, row) in s.as_mut_slice().chunks_exact_mut(self.classes).enumerate() {
            let m = row.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
            let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            let y = self.labels[i];
            nll += lse - row[y];
            for (k, v) in row.iter_mut().enumerate() {
                let p = (*v - lse).exp();
                *v = (p - if k == y { 1.0 } else { 0.0 }) / n;
            }
        }
        let mut gw = s.t_matmul(self.x).expect("shapes checked");
        gw.axpy(self.lambda, &w).expect("same shape");
        let gb = s.column_sums();
        let value = nll / n + 0.5 * self.lambda * w.frobenius_sq();
        (value, pack(&gw, &gb))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lbfgs(problem: &Problem<'_>, mut theta: Vec<f64>, opts: &LogregOptions) -> Vec<f64> {
    let (mut f, mut g) = problem.value_and_grad(&theta);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    for iter in 0..opts.max_iter {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm <= opts.grad_tol {
            log::debug!("logreg converged after {iter} iterations (|g| = {gnorm:.3e})");
            return theta;
        }
        // Two-loop recursion for d = -H g.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = history
            .back()
            .map_or(1.0 / gnorm.max(1.0), |(s, y, _)| dot(s, y) / dot(y, y));
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let bcoef = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - bcoef) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            history.clear();
            dir = g.iter().map(|v| -v / gnorm.max(1.0)).collect();
            slope = dot(&g, &dir);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
            let (fc, gc) = problem.value_and_grad(&cand);
            if fc.is_finite() && fc <= f + 1e-4 * step * slope {
                accepted = Some((cand, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, fc, gc)) = accepted else {
            log::debug!("logreg line search stalled at iteration {iter} (|g| = {gnorm:.3e})");
            return theta;
        };
        let s: Vec<f64> = cand.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gc.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        theta = cand;
        f = fc;
        g = gc;
    }
    log::warn!(
        "logreg stopped at max_iter = {} with |g| = {:.3e}",
        opts.max_iter,
        dot(&g, &g).sqrt()
    );
    theta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.2, 0.7, 0.7]), 1);
        assert_eq!(argmax(&[1.0, 1.0]), 0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = Rng::new(3);
        let x = Matrix::new(7, 4, rng.uniform(0.0, 1.0, 28).unwrap()).unwrap();
        let labels = vec![0, 1, 2, 1, 0, 2, 2];
        let problem = Problem::new(&x, &labels, 3, 0.3).unwrap();
        let theta = rng.uniform(-1.0, 1.0, 15).unwrap();
        let (_, g) = problem.value_and_grad(&theta);
        for i in 0..theta.len() {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[i] += 1e-5;
            tm[i] -= 1e-5;
            let fd = (problem.value_and_grad(&tp).0 - problem.value_and_grad(&tm).0) / 2e-5;
            assert!((fd - g[i]).abs() < 1e-8, "component {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn error_rate_enumeration() {
        let clf = LinearClassifier {
            weights: Matrix::identity(2),
            bias: vec![0.0, 0.0],
            lambda: 1.0,
        };
        let x = Matrix::from_rows(&[
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![2.0, 1.0],
            vec![0.0, 3.0],
        ])
        .unwrap();
        // Predictions are [0, 1, 0, 1].
        assert_eq!(error_rate(&clf, &x, &[0, 1, 0, 1]).unwrap(), 0.0);
        assert_eq!(error_rate(&clf, &x, &[1, 0, 1, 0]).unwrap(), 1.0);
        assert_eq!(error_rate(&clf, &x, &[0, 1, 1, 1]).unwrap(), 0.25);
    }

    #[test]
    fn single_class_is_rejected() {
        let x = Matrix::zeros(3, 2);
        assert!(matches!(train_logreg(&x, &[1, 1, 1], 1.0), Err(Error::Argument(_))));
        assert!(train_logreg(&x, &[0, 1, 1], 0.0).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let clf = LinearClassifier {
            weights: Matrix::from_rows(&[vec![1.5, -2.0], vec![0.25, 4.0], vec![0.0, 1.0]]).unwrap(),
            bias: vec![0.1, 0.2, 0.3],
            lambda: 1e-3,
        };
        let mut buf = Vec::new();
        clf.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"SLR1");
        assert_eq!(buf.len(), 4 + 8 + 8 + 8 + 9 * 8);
        assert_eq!(LinearClassifier::read_from(&mut buf.as_slice()).unwrap(), clf);
    }
}
