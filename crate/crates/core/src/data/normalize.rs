use std::fmt;
use std::str::FromStr;

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum NormMethod {
    /// Each column to `[0, 1]`.
    #[default]
    MinMax,
    /// Each column to mean 0, population standard deviation 1.
    ZScore,
    None,
}

impl NormMethod {
    pub fn name(self) -> &'static str {
        match self {
            NormMethod::MinMax => "minmax",
            NormMethod::ZScore => "zscore",
            NormMethod::None => "none",
        }
    }
}

impl fmt::Display for NormMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NormMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minmax" => Ok(NormMethod::MinMax),
            "zscore" => Ok(NormMethod::ZScore),
            "none" => Ok(NormMethod::None),
            other => Err(Error::InvalidConfig(format!("unknown normalization {other:?}"))),
        }
    }
}

/// Per-column affine map `x ↦ (x − offset) · scale`, fitted on one split and
/// reused on any other. Constant columns get scale 0 and so map to 0.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizationParams<T> {
    pub method: NormMethod,
    pub offsets: Vec<T>,
    pub scales: Vec<T>,
}

impl<T: Scalar> NormalizationParams<T> {
    /// Fits statistics from `features` alone.
    pub fn fit(features: &DenseMatrix<T>, method: NormMethod) -> Self {
        let (rows, cols) = features.shape();
        let n = T::of(rows as f64);
        let mut offsets = Vec::with_capacity(cols);
        let mut scales = Vec::with_capacity(cols);
        for j in 0..cols {
            let col = features.column(j);
            let (offset, spread) = match method {
                NormMethod::None => (T::zero(), T::one()),
                NormMethod::MinMax => {
                    let lo = col.iter().copied().fold(T::infinity(), T::min);
                    let hi = col.iter().copied().fold(T::neg_infinity(), T::max);
                    (lo, hi - lo)
                }
                NormMethod::ZScore => {
                    let mean = col.iter().copied().sum::<T>() / n;
                    let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
                    (mean, var.sqrt())
                }
            };
            offsets.push(offset);
            scales.push(match method {
                NormMethod::None => T::one(),
                _ if spread > T::zero() => T::one() / spread,
                _ => T::zero(),
            });
        }
        Self {
            method,
            offsets,
            scales,
        }
    }

    pub fn identity(cols: usize) -> Self {
        Self {
            method: NormMethod::None,
            offsets: vec![T::zero(); cols],
            scales: vec![T::one(); cols],
        }
    }

    pub fn feature_count(&self) -> usize {
        self.offsets.len()
    }

    pub fn apply(&self, features: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if features.cols() != self.offsets.len() {
            return Err(Error::DimensionMismatch {
                op: "normalize",
                left: (0, self.offsets.len()),
                right: features.shape(),
            });
        }
        if self.method == NormMethod::None {
            return Ok(features.clone());
        }
        let cols = features.cols();
        DenseMatrix::from_fn(features.rows(), cols, |i, j| {
            (features.get(i, j) - self.offsets[j]) * self.scales[j]
        })
    }
}

/// Normalizes a dataset with statistics fitted on that same dataset.
pub fn normalize<T: Scalar>(ds: &Dataset<T>, method: NormMethod) -> Result<(Dataset<T>, NormalizationParams<T>)> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let params = NormalizationParams::fit(ds.features(), method);
    let features = params.apply(ds.features())?;
    Ok((ds.with_features(features)?, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ds(rows: &[[f64; 2]]) -> Dataset<f64> {
        let labels = (0..rows.len()).map(|i| i % 2).collect();
        Dataset::new("n", DenseMatrix::from_rows(rows).unwrap(), labels).unwrap()
    }

    #[test]
    fn minmax_is_linear_and_constant_columns_vanish() {
        let d = ds(&[[0.0, 3.0], [5.0, 3.0], [10.0, 3.0]]);
        let (out, params) = normalize(&d, NormMethod::MinMax).unwrap();
        assert_eq!(out.features().column(0), vec![0.0, 0.5, 1.0]);
        assert_eq!(out.features().column(1), vec![0.0, 0.0, 0.0]);
        assert_eq!(params.offsets, vec![0.0, 3.0]);
        let (z, _) = normalize(&d, NormMethod::ZScore).unwrap();
        assert_eq!(z.features().column(1), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn zscore_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<[f64; 2]> = (0..37)
            .map(|_| [rng.gen_range(-5.0..20.0), rng.gen_range(100.0..101.0)])
            .collect();
        let (out, _) = normalize(&ds(&rows), NormMethod::ZScore).unwrap();
        for j in 0..2 {
            let col = out.features().column(j);
            // reverse-order accumulation, independent of the fitting pass
            let mean = col.iter().rev().sum::<f64>() / col.len() as f64;
            let sd = (col.iter().rev().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
            assert!(mean.abs() < 1e-12);
            assert!((sd - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn train_params_apply_to_other_split() {
        let train = ds(&[[0.0, 1.0], [2.0, 3.0]]);
        let params = NormalizationParams::fit(train.features(), NormMethod::MinMax);
        let test = DenseMatrix::from_rows(&[[4.0, 2.0]]).unwrap();
        assert_eq!(params.apply(&test).unwrap().row(0), &[2.0, 0.5]);
        let wrong = DenseMatrix::from_rows(&[[1.0]]).unwrap();
        assert!(params.apply(&wrong).is_err());
    }
}
