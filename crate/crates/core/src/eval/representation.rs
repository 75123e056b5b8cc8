use crate::composite::{composite_encode_clean, CompositeParams};
use crate::dae::{encode, DaeParams};
use crate::error::{shape_err, Result};
use crate::numerics::Matrix;

use super::dataset::{LabeledDataset, Part};
use super::logreg::error_rate;
use super::select::{select_lambda, LambdaSelection};

/// A trained encoder whose hidden units serve as features.
pub trait Encoder {
    fn input_dim(&self) -> usize;
    fn hidden_dim(&self) -> usize;
    /// Hidden activations of uncorrupted input.
    fn encode_clean(&self, x: &Matrix) -> Result<Matrix>;
}

impl Encoder for DaeParams {
    fn input_dim(&self) -> usize {
        DaeParams::input_dim(self)
    }

    fn hidden_dim(&self) -> usize {
        DaeParams::hidden_dim(self)
    }

    fn encode_clean(&self, x: &Matrix) -> Result<Matrix> {
        encode(self, x)
    }
}

impl Encoder for CompositeParams {
    fn input_dim(&self) -> usize {
        CompositeParams::input_dim(self)
    }

    fn hidden_dim(&self) -> usize {
        CompositeParams::hidden_dim(self)
    }

    fn encode_clean(&self, x: &Matrix) -> Result<Matrix> {
        composite_encode_clean(self, x)
    }
}

/// Representation of `data`: the encoder applied without any corruption.
pub fn extract(p: &dyn Encoder, data: &Matrix) -> Result<Matrix> {
    if data.cols() != p.input_dim() {
        return Err(shape_err(
            "feature extraction",
            data.shape(),
            (p.hidden_dim(), p.input_dim()),
        ));
    }
    p.encode_clean(data)
}

/// Columns of `a` followed by columns of `b`.
pub fn concat(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.hcat(b)
}

/// Validation-selected classifier on a representation, with its test error.
#[derive(Clone, Debug)]
pub struct EvalReport {
    pub selection: LambdaSelection,
    pub test_error: Option<f64>,
}

/// Trains on the split's training part of `rep` (rows aligned with `ds`),
/// selects λ on validation, and scores the test part if present.
pub fn evaluate_representation(rep: &Matrix, ds: &LabeledDataset, grid: &[f64]) -> Result<EvalReport> {
    let pick = |part| {
        (
            rep.select_rows(ds.split.indices(part)),
            ds.labels_of(part),
        )
    };
    let (tx, ty) = pick(Part::Train);
    let (vx, vy) = pick(Part::Valid);
    let selection = select_lambda((&tx, &ty), (&vx, &vy), ds.classes, grid)?;
    let test_error = if ds.split.test.is_empty() {
        None
    } else {
        let (sx, sy) = pick(Part::Test);
        Some(error_rate(&selection.classifier, &sx, &sy)?)
    };
    Ok(EvalReport {
        selection,
        test_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dae::Architecture;
    use crate::numerics::Rng;

    #[test]
    fn extraction_width_and_determinism() {
        let mut rng = Rng::new(1);
        let p = DaeParams::init(6, Architecture::sigmoid(4), &mut rng);
        let x = Matrix::new(5, 6, rng.uniform(0.0, 1.0, 30).unwrap()).unwrap();
        let a = extract(&p, &x).unwrap();
        assert_eq!(a.shape(), (5, 4));
        assert_eq!(a, extract(&p, &x).unwrap());
        assert!(extract(&p, &Matrix::zeros(5, 3)).is_err());

        let z = DaeParams::zeros(6, Architecture::sigmoid(4));
        assert!(extract(&z, &x).unwrap().as_slice().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn concat_layout() {
        let a = Matrix::filled(3, 2000, 1.0);
        let b = Matrix::filled(3, 2000, 2.0);
        let c = concat(&a, &b).unwrap();
        assert_eq!(c.cols(), 4000);
        assert_eq!(&c.row(1)[..2000], a.row(1));
        assert_eq!(concat(&a, &Matrix::zeros(3, 0)).unwrap(), a);
        assert!(concat(&a, &Matrix::zeros(2, 1)).is_err());
    }
}
