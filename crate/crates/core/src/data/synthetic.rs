//! Small generated datasets for tests and demonstrations.

use crate::eval::LabeledDataset;
use crate::numerics::{Matrix, Rng};

/// Binary `side × side` images made of full horizontal (label 0) or
/// vertical (label 1) bars. Each image lights between one and `side - 1`
/// lines, chosen at random, then flips each pixel with probability `flip`.
pub fn bars(n: usize, side: usize, flip: f64, seed: u64) -> LabeledDataset {
    assert!(side >= 2, "bars need at least a 2x2 image");
    let mut rng = Rng::new(seed);
    let d = side * side;
    let mut x = Matrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let vertical = rng.next_f64() < 0.5;
        let lines = 1 + rng.below(side - 1);
        let perm = rng.permutation(side);
        let row = x.row_mut(i);
        for &line in &perm[..lines] {
            for k in 0..side {
                let (r, c) = if vertical { (k, line) } else { (line, k) };
                row[r * side + c] = 1.0;
            }
        }
        for v in row.iter_mut() {
            if rng.next_f64() < flip {
                *v = 1.0 - *v;
            }
        }
        labels.push(usize::from(vertical));
    }
    LabeledDataset::new(x, labels, 2).expect("labels are 0 or 1")
}

/// Two-class bag-of-words documents. Every word occurs with probability
/// `base`; each class also has its own block of `vocab / 10` planted words
/// that occur with probability `planted`.
pub fn planted_bow(n: usize, vocab: usize, base: f64, planted: f64, seed: u64) -> LabeledDataset {
    let mut rng = Rng::new(seed);
    let block = (vocab / 10).max(1);
    let mut x = Matrix::zeros(n, vocab);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = usize::from(rng.next_f64() < 0.5);
        let lo = class * block;
        let row = x.row_mut(i);
        for (w, v) in row.iter_mut().enumerate() {
            let p = if (lo..lo + block).contains(&w) { planted } else { base };
            if rng.next_f64() < p {
                *v = 1.0;
            }
        }
        labels.push(class);
    }
    LabeledDataset::new(x, labels, 2).expect("labels are 0 or 1")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bars_are_binary_and_labeled() {
        let ds = bars(40, 4, 0.0, 3);
        assert_eq!(ds.features.shape(), (40, 16));
        assert!(ds.features.as_slice().iter().all(|&v| v == 0.0 || v == 1.0));
        for (row, &label) in ds.features.iter_rows().zip(&ds.labels) {
            // Without flips, a lit line is complete along its orientation.
            let lit_rows = (0..4).filter(|&r| row[r * 4..r * 4 + 4].iter().all(|&v| v == 1.0)).count();
            let lit_cols = (0..4).filter(|&c| (0..4).all(|r| row[r * 4 + c] == 1.0)).count();
            if label == 0 {
                assert!(lit_rows >= 1 && lit_cols == 0);
            } else {
                assert!(lit_cols >= 1 && lit_rows == 0);
            }
        }
        assert_eq!(bars(40, 4, 0.0, 3), ds);
    }

    #[test]
    fn planted_words_separate_classes() {
        let ds = planted_bow(400, 50, 0.05, 0.4, 1);
        let mean = |class: usize, w: usize| {
            let rows: Vec<_> = (0..ds.len()).filter(|&i| ds.labels[i] == class).collect();
            rows.iter().map(|&i| ds.features.get(i, w)).sum::<f64>() / rows.len() as f64
        };
        assert!(mean(0, 0) > 0.3 && mean(1, 0) < 0.1);
        assert!(mean(1, 5) > 0.3 && mean(0, 5) < 0.1);
    }
}
