use scheda_core::data::{
    frequent_columns, load_bow, load_cifar10, split, standard_batch_paths, synthetic,
};
use scheda_core::eval::LabeledDataset;
use scheda_core::numerics::derive_seed;
use scheda_core::{Error, Result};

use crate::config::{DataConfig, DataKind, Generator};

/// Loads the configured examples and assigns the train/validation/test split.
pub fn load_dataset(d: &DataConfig) -> Result<LabeledDataset> {
    let ds = match d.kind {
        DataKind::Cifar10 => {
            let dir = d.path.as_ref().expect("checked by resolve");
            let (train_paths, test_path) = standard_batch_paths(dir);
            let pool = load_cifar10(&train_paths)?;
            let test = load_cifar10(&[test_path])?;
            let test = match d.test {
                Some(n) => prefix(test, n)?,
                None => test,
            };
            pool.with_test_set(test)?
        }
        DataKind::Bow => {
            let vocab = d.vocab.expect("checked by resolve");
            let mut pool = load_bow(d.path.as_ref().expect("checked by resolve"), vocab, None)?;
            let mut test = d
                .test_path
                .as_ref()
                .map(|p| load_bow(p, vocab, None))
                .transpose()?;
            // The vocabulary cap is chosen on the training file only.
            if let Some(k) = d.top_k {
                let keep = frequent_columns(&pool.features, k);
                pool.features = pool.features.select_columns(&keep);
                if let Some(t) = &mut test {
                    t.features = t.features.select_columns(&keep);
                }
            }
            match test {
                Some(t) => pool.with_test_set(t)?,
                None => pool,
            }
        }
        DataKind::Synthetic => {
            let n = d.train + d.valid;
            let test_n = d.test.unwrap_or(0);
            let generate = |count, seed| match d.generator.unwrap_or(Generator::Bars) {
                Generator::Bars => synthetic::bars(count, d.side.unwrap_or(4), d.flip.unwrap_or(0.05), seed),
                Generator::Bow => synthetic::planted_bow(
                    count,
                    d.vocab.unwrap_or(100),
                    d.base.unwrap_or(0.05),
                    d.planted.unwrap_or(0.3),
                    seed,
                ),
            };
            let pool = generate(n, d.split_seed);
            if test_n > 0 {
                pool.with_test_set(generate(test_n, derive_seed(d.split_seed, 1)))?
            } else {
                pool
            }
        }
    };
    split(ds, d.train, d.valid, d.split_seed)
}

fn prefix(ds: LabeledDataset, n: usize) -> Result<LabeledDataset> {
    if n > ds.len() {
        return Err(Error::Argument(format!(
            "data.test asks for {n} test examples but only {} exist",
            ds.len()
        )));
    }
    let idx: Vec<usize> = (0..n).collect();
    LabeledDataset::new(ds.features.select_rows(&idx), ds.labels[..n].to_vec(), ds.classes)
}
