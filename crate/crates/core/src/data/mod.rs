//! Dataset loaders, splitting and synthetic generators.

mod bow;
mod cifar;
pub mod synthetic;

pub use bow::{format_bow, frequent_columns, load_bow, parse_bow};
pub use cifar::{
    encode_cifar10, load_cifar10, parse_cifar10, standard_batch_paths, CIFAR_CLASSES, CIFAR_PIXELS,
    CIFAR_RECORD,
};

use crate::error::{Error, Result};
use crate::eval::{LabeledDataset, Split};
use crate::numerics::Rng;

/// Draws `train_n` training and `valid_n` validation indices from the
/// rows not already reserved for testing, using a permutation seeded by
/// `seed`. Index lists come back sorted.
pub fn split(ds: LabeledDataset, train_n: usize, valid_n: usize, seed: u64) -> Result<LabeledDataset> {
    let pool = ds.non_test_indices();
    if train_n + valid_n > pool.len() {
        return Err(Error::Argument(format!(
            "requested {train_n} + {valid_n} examples but only {} are available",
            pool.len()
        )));
    }
    let perm = Rng::new(seed).permutation(pool.len());
    let mut train: Vec<usize> = perm[..train_n].iter().map(|&k| pool[k]).collect();
    let mut valid: Vec<usize> = perm[train_n..train_n + valid_n]
        .iter()
        .map(|&k| pool[k])
        .collect();
    train.sort_unstable();
    valid.sort_unstable();
    let test = ds.split.test.clone();
    ds.with_split(Split { train, valid, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;
    use std::collections::HashSet;

    fn pool(n: usize) -> LabeledDataset {
        LabeledDataset::new(Matrix::zeros(n, 1), vec![0; n], 1).unwrap()
    }

    #[test]
    fn cifar_sized_split_is_exhaustive() {
        let ds = split(pool(50_000), 45_000, 5_000, 1).unwrap();
        assert_eq!(ds.split.train.len(), 45_000);
        assert_eq!(ds.split.valid.len(), 5_000);
        let all: HashSet<usize> = ds.split.train.iter().chain(&ds.split.valid).copied().collect();
        assert_eq!(all.len(), 50_000);
    }

    #[test]
    fn split_is_seeded() {
        let a = split(pool(100), 60, 20, 5).unwrap();
        let b = split(pool(100), 60, 20, 5).unwrap();
        let c = split(pool(100), 60, 20, 6).unwrap();
        assert_eq!(a.split, b.split);
        assert_ne!(a.split, c.split);
    }

    #[test]
    fn test_rows_are_never_drawn() {
        let test = pool(10);
        let ds = pool(30).with_test_set(test).unwrap();
        let ds = split(ds, 25, 5, 2).unwrap();
        assert!(ds.split.train.iter().chain(&ds.split.valid).all(|&i| i < 30));
        assert_eq!(ds.split.test, (30..40).collect::<Vec<_>>());
        assert!(split(ds, 31, 0, 2).is_err());
    }
}
