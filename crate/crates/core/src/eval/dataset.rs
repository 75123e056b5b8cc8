use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Index lists into a dataset's rows.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

/// Which part of a [`Split`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn indices(&self, part: Part) -> &[usize] {
        match part {
            Part::Train => &self.train,
            Part::Valid => &self.valid,
            Part::Test => &self.test,
        }
    }
}

/// Features in `[0, 1]` with integer class labels and a train/validation/test split.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub classes: usize,
    pub split: Split,
}

impl LabeledDataset {
    /// A dataset with an empty split.
    pub fn new(features: Matrix, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::Shape(format!(
                "{} labels for {} feature rows",
                labels.len(),
                features.rows()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::Argument(format!(
                "label {bad} outside 0..{classes}"
            )));
        }
        Ok(Self {
            features,
            labels,
            classes,
            split: Split::default(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Replaces the split after checking it is disjoint and in range.
    pub fn with_split(mut self, split: Split) -> Result<Self> {
        let mut seen = HashSet::new();
        for (name, idx) in [("train", &split.train), ("valid", &split.valid), ("test", &split.test)] {
            for &i in idx {
                if i >= self.len() {
                    return Err(Error::Argument(format!(
                        "{name} index {i} out of range for {} examples",
                        self.len()
                    )));
                }
                if !seen.insert(i) {
                    return Err(Error::Argument(format!(
                        "index {i} appears twice in the split"
                    )));
                }
            }
        }
        self.split = split;
        Ok(self)
    }

    /// Appends `test`'s rows and marks them as the test part.
    pub fn with_test_set(mut self, test: LabeledDataset) -> Result<Self> {
        if test.dim() != self.dim() {
            return Err(Error::Shape(format!(
                "test features have width {}, expected {}",
                test.dim(),
                self.dim()
            )));
        }
        let start = self.len();
        let mut data = std::mem::replace(&mut self.features, Matrix::zeros(0, 0)).into_vec();
        data.extend_from_slice(test.features.as_slice());
        self.features = Matrix::new(start + test.len(), test.dim(), data)?;
        self.labels.extend_from_slice(&test.labels);
        self.classes = self.classes.max(test.classes);
        self.split.test = (start..start + test.len()).collect();
        Ok(self)
    }

    pub fn features_of(&self, part: Part) -> Matrix {
        self.features.select_rows(self.split.indices(part))
    }

    pub fn labels_of(&self, part: Part) -> Vec<usize> {
        self.split
            .indices(part)
            .iter()
            .map(|&i| self.labels[i])
            .collect()
    }

    /// Rows not reserved for testing.
    pub fn non_test_indices(&self) -> Vec<usize> {
        let test: HashSet<usize> = self.split.test.iter().copied().collect();
        (0..self.len()).filter(|i| !test.contains(i)).collect()
    }
}
