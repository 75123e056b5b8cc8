//! Input corruption processes.

use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

/// Noise distribution with its level.
///
/// For masking the level is the drop probability; for Gaussian noise it is
/// the variance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CorruptionKind {
    Masking(f64),
    Gaussian(f64),
}

impl CorruptionKind {
    pub fn level(self) -> f64 {
        match self {
            CorruptionKind::Masking(v) | CorruptionKind::Gaussian(v) => v,
        }
    }

    /// Same family, different level.
    pub fn with_level(self, level: f64) -> Self {
        match self {
            CorruptionKind::Masking(_) => CorruptionKind::Masking(level),
            CorruptionKind::Gaussian(_) => CorruptionKind::Gaussian(level),
        }
    }

    pub fn validate(self) -> Result<()> {
        match self {
            CorruptionKind::Masking(v) if !(0.0..=1.0).contains(&v) => Err(Error::Argument(
                format!("masking level must lie in [0, 1], got {v}"),
            )),
            CorruptionKind::Gaussian(v) if !(v >= 0.0 && v.is_finite()) => Err(Error::Argument(
                format!("Gaussian noise variance must be finite and >= 0, got {v}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn apply(self, x: &Matrix, rng: &mut Rng) -> Result<Matrix> {
        match self {
            CorruptionKind::Masking(v) => mask_corrupt(x, v, rng),
            CorruptionKind::Gaussian(v) => gaussian_corrupt(x, v, rng),
        }
    }

    pub fn family(self) -> &'static str {
        match self {
            CorruptionKind::Masking(_) => "masking",
            CorruptionKind::Gaussian(_) => "gaussian",
        }
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.family(), self.level())
    }
}

/// Zeroes each entry independently with probability `level`.
///
/// Draws exactly one uniform per entry in row-major order, whatever the level.
pub fn mask_corrupt(x: &Matrix, level: f64, rng: &mut Rng) -> Result<Matrix> {
    CorruptionKind::Masking(level).validate()?;
    let mut out = x.clone();
    for v in out.as_mut_slice() {
        if rng.next_f64() < level {
            *v = 0.0;
        }
    }
    Ok(out)
}

/// Adds independent zero-mean Gaussian noise of variance `variance`. No clipping.
pub fn gaussian_corrupt(x: &Matrix, variance: f64, rng: &mut Rng) -> Result<Matrix> {
    CorruptionKind::Gaussian(variance).validate()?;
    let sd = variance.sqrt();
    let mut out = x.clone();
    for v in out.as_mut_slice() {
        *v += sd * rng.standard_normal();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |i, j| ((i * cols + j) % 7) as f64 / 7.0)
    }

    #[test]
    fn masking_extremes() {
        let x = ramp(10, 10);
        let mut rng = Rng::new(1);
        assert_eq!(mask_corrupt(&x, 0.0, &mut rng).unwrap(), x);
        assert!(mask_corrupt(&x, 1.0, &mut rng)
            .unwrap()
            .as_slice()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn masking_rejects_out_of_range() {
        let x = ramp(2, 2);
        assert!(mask_corrupt(&x, 1.01, &mut Rng::new(0)).is_err());
        assert!(mask_corrupt(&x, -0.1, &mut Rng::new(0)).is_err());
        assert!(gaussian_corrupt(&x, -0.5, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn masking_keeps_or_zeroes() {
        let x = ramp(40, 25);
        let y = mask_corrupt(&x, 0.4, &mut Rng::new(9)).unwrap();
        for (a, b) in x.as_slice().iter().zip(y.as_slice()) {
            assert!(*b == 0.0 || b == a);
            if *a == 0.0 {
                assert_eq!(*b, 0.0);
            }
        }
    }

    #[test]
    fn gaussian_zero_variance_is_identity() {
        let x = ramp(3, 5);
        let y = gaussian_corrupt(&x, 0.0, &mut Rng::new(2)).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn corruption_is_deterministic_in_rng_state() {
        let x = ramp(8, 8);
        for kind in [CorruptionKind::Masking(0.3), CorruptionKind::Gaussian(0.1)] {
            let a = kind.apply(&x, &mut Rng::new(4)).unwrap();
            let b = kind.apply(&x, &mut Rng::new(4)).unwrap();
            assert_eq!(a, b);
        }
    }
}
