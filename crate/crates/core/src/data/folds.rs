use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Assignment of every sample to one of `k` folds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    pub fold_of_sample: Vec<usize>,
    pub k: usize,
    pub seed: u64,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of_sample.len())
            .filter(|&i| self.fold_of_sample[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of_sample.len())
            .filter(|&i| self.fold_of_sample[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of_sample {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified k-fold assignment.
///
/// Each class is shuffled with a seeded generator, then the classes are laid
/// end to end and dealt round-robin with one running counter. Fold sizes and
/// per-class fold counts therefore each differ by at most one.
pub fn stratified_kfold<T: Scalar>(ds: &Dataset<T>, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("fold count must be at least 2, got {k}")));
    }
    if k > ds.len() {
        return Err(Error::TooManyFolds {
            k,
            samples: ds.len(),
        });
    }
    let mut by_class = vec![Vec::new(); ds.class_count()];
    for (i, &l) in ds.labels().iter().enumerate() {
        by_class[l].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of_sample = vec![0; ds.len()];
    let mut counter = 0;
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            fold_of_sample[i] = counter % k;
            counter += 1;
        }
    }
    Ok(FoldPlan {
        fold_of_sample,
        k,
        seed,
    })
}
