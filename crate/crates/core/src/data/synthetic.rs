//! Seeded toy datasets for tests, benchmarks and demos.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::dataset::Dataset;
use crate::error::Result;
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Two interleaved spirals in the plane, `samples` points split evenly
/// between the classes. `turns` is the number of half-revolutions each arm
/// makes and `noise` the standard deviation of isotropic Gaussian jitter.
pub fn two_spirals<T: Scalar>(samples: usize, turns: f64, noise: f64, seed: u64) -> Result<Dataset<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, noise.max(0.0)).expect("finite sd");
    let mut values = Vec::with_capacity(samples * 2);
    let mut labels = Vec::with_capacity(samples);
    for i in 0..samples {
        let class = i % 2;
        let r: f64 = rng.gen_range(0.05..1.0);
        let theta = r * turns * PI + class as f64 * PI;
        values.push(T::of(r * theta.cos() + jitter.sample(&mut rng)));
        values.push(T::of(r * theta.sin() + jitter.sample(&mut rng)));
        labels.push(class);
    }
    Dataset::new("two_spirals", DenseMatrix::new(samples, 2, values)?, labels)
}

/// Isotropic Gaussian clusters with centres drawn uniformly from `[-1, 1]^d`.
pub fn gaussian_blobs<T: Scalar>(
    samples: usize,
    features: usize,
    classes: usize,
    spread: f64,
    seed: u64,
) -> Result<Dataset<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centres: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..features).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let jitter = Normal::new(0.0, spread.max(0.0)).expect("finite sd");
    let mut values = Vec::with_capacity(samples * features);
    let mut labels = Vec::with_capacity(samples);
    for i in 0..samples {
        let class = i % classes;
        for c in &centres[class] {
            values.push(T::of(c + jitter.sample(&mut rng)));
        }
        labels.push(class);
    }
    Dataset::new("gaussian_blobs", DenseMatrix::new(samples, features, values)?, labels)
}

/// Two classes on either side of the hyperplane `w·x = 0` with a margin of
/// `margin` in the first coordinate's direction. Linearly separable by
/// construction.
pub fn separable_halves<T: Scalar>(samples: usize, features: usize, margin: f64, seed: u64) -> Result<Dataset<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(samples * features);
    let mut labels = Vec::with_capacity(samples);
    for i in 0..samples {
        let class = i % 2;
        let side = if class == 0 { -1.0 } else { 1.0 };
        values.push(T::of(side * rng.gen_range(margin..1.0)));
        for _ in 1..features {
            values.push(T::of(rng.gen_range(-1.0..1.0)));
        }
        labels.push(class);
    }
    Dataset::new("separable_halves", DenseMatrix::new(samples, features, values)?, labels)
}
