use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Feature matrix plus dense integer class labels.
///
/// A dataset built by [`Dataset::new`] or loaded from disk uses every class id
/// in `0..class_count`. Row subsets taken for cross-validation keep the parent's
/// `class_count` so that target encodings stay aligned, even when a rare class
/// is missing from the subset.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    features: DenseMatrix<T>,
    labels: Vec<usize>,
    class_count: usize,
    class_names: Vec<String>,
    name: String,
}

impl<T: Scalar> Dataset<T> {
    /// Builds a dataset, deriving `class_count` from the largest label. Every
    /// class below it must occur.
    pub fn new(name: impl Into<String>, features: DenseMatrix<T>, labels: Vec<usize>) -> Result<Self> {
        let class_count = labels.iter().max().map_or(0, |&m| m + 1);
        let class_names = (0..class_count).map(|c| c.to_string()).collect();
        Self::with_class_names(name, features, labels, class_names)
    }

    pub fn with_class_names(
        name: impl Into<String>,
        features: DenseMatrix<T>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let class_count = class_names.len();
        if labels.len() != features.rows() {
            return Err(Error::DimensionMismatch {
                op: "dataset labels",
                left: features.shape(),
                right: (labels.len(), 1),
            });
        }
        let mut seen = vec![false; class_count];
        for &l in &labels {
            if l >= class_count {
                return Err(Error::LabelOutOfRange {
                    label: l,
                    classes: class_count,
                });
            }
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidConfig(format!(
                "class {missing} of {class_count} has no samples"
            )));
        }
        if class_count < 2 {
            return Err(Error::SingleClass(class_count));
        }
        Ok(Self {
            features,
            labels,
            class_count,
            class_names,
            name: name.into(),
        })
    }

    pub fn features(&self) -> &DenseMatrix<T> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.features.cols()
    }

    /// Rows `indices` in order, keeping the parent's class count and names.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            features: self.features.select_rows(indices)?,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
            class_names: self.class_names.clone(),
            name: self.name.clone(),
        })
    }

    /// Same rows and labels with replaced features (e.g. after normalization).
    pub fn with_features(&self, features: DenseMatrix<T>) -> Result<Self> {
        if features.rows() != self.len() {
            return Err(Error::DimensionMismatch {
                op: "with_features",
                left: self.features.shape(),
                right: features.shape(),
            });
        }
        Ok(Self {
            features,
            ..self.clone()
        })
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// `T × K` indicator matrix with a single 1 per row.
pub fn one_hot<T: Scalar>(labels: &[usize], classes: usize) -> Result<DenseMatrix<T>> {
    let mut values = vec![T::zero(); labels.len() * classes];
    for (t, &l) in labels.iter().enumerate() {
        if l >= classes {
            return Err(Error::LabelOutOfRange { label: l, classes });
        }
        values[t * classes + l] = T::one();
    }
    DenseMatrix::new(labels.len(), classes, values)
}

/// Index of the largest entry of each row; ties go to the lowest index.
pub fn argmax_rows<T: Scalar>(scores: &DenseMatrix<T>) -> Vec<usize> {
    (0..scores.rows())
        .map(|i| {
            let row = scores.row(i);
            let mut best = 0;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Fraction of positions where the two label vectors agree.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(predicted.len(), truth.len(), "label vectors differ in length");
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}
