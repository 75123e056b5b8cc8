use crate::error::{Error, Result};
use crate::numerics::Matrix;

use super::logreg::{error_rate, train_logreg_with, LinearClassifier, LogregOptions};

/// Index of the candidate with the lowest validation error; ties go to
/// the earliest candidate. NaN errors never win.
pub fn select_model<T>(candidates: &[(T, f64)]) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::Argument("no candidates to select from".into()));
    }
    let mut best = 0;
    for (i, (_, err)) in candidates.iter().enumerate().skip(1) {
        let current = candidates[best].1;
        if *err < current || (current.is_nan() && !err.is_nan()) {
            best = i;
        }
    }
    Ok(best)
}

/// Classifier trained on one λ of a grid, chosen on validation error.
#[derive(Clone, Debug)]
pub struct LambdaSelection {
    pub classifier: LinearClassifier,
    pub lambda: f64,
    pub valid_error: f64,
    /// `(λ, validation error)` for every grid point, in grid order.
    pub table: Vec<(f64, f64)>,
}

/// Trains one classifier per λ and keeps the best on validation.
pub fn select_lambda(
    train: (&Matrix, &[usize]),
    valid: (&Matrix, &[usize]),
    classes: usize,
    grid: &[f64],
) -> Result<LambdaSelection> {
    let mut fitted = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let clf = train_logreg_with(train.0, train.1, classes, lambda, &LogregOptions::default())?;
        let err = error_rate(&clf, valid.0, valid.1)?;
        log::debug!("lambda {lambda:e}: validation error {err:.4}");
        fitted.push((clf, err));
    }
    let best = select_model(&fitted)?;
    let table = grid.iter().zip(&fitted).map(|(&l, (_, e))| (l, *e)).collect();
    let (classifier, valid_error) = fitted.swap_remove(best);
    Ok(LambdaSelection {
        lambda: classifier.lambda,
        classifier,
        valid_error,
        table,
    })
}
