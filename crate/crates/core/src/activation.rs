use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Hidden-node nonlinearity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Activation {
    #[default]
    Sigmoid,
    Tanh,
    /// Linear pass-through; used to check the linear limits of the models.
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Sigmoid => sigmoid_scalar(x),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    pub fn apply_matrix<T: Scalar>(self, m: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        m.map(|v| self.apply(v))
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::InvalidConfig(format!("unknown activation {other:?}"))),
        }
    }
}

/// Logistic function, evaluated on the branch that never overflows.
#[inline]
pub fn sigmoid_scalar<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Elementwise logistic function.
pub fn sigmoid<T: Scalar>(m: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    Activation::Sigmoid.apply_matrix(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn symmetry_point_and_reference_values() {
        assert_eq!(sigmoid_scalar(0.0f64), 0.5);
        // 40-digit references
        for (x, want) in [
            (1.0_f64, 0.731_058_578_630_004_9),
            (3.5, 0.970_687_769_248_643_7),
            (-2.25, 0.095_349_464_899_109_49),
        ] {
            assert!((sigmoid_scalar(x) - want).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn saturates_without_overflow() {
        assert_eq!(sigmoid_scalar(-1000.0f64), 0.0);
        assert_eq!(sigmoid_scalar(1000.0f64), 1.0);
        let m = DenseMatrix::from_rows(&[[-800.0f64, 800.0]]).unwrap();
        assert!(sigmoid(&m).is_ok());
    }

    #[test]
    fn parses_names() {
        for a in [Activation::Sigmoid, Activation::Tanh, Activation::Identity] {
            assert_eq!(a.name().parse::<Activation>().unwrap(), a);
        }
        assert!("relu".parse::<Activation>().is_err());
    }

    proptest! {
        #[test]
        fn symmetric_and_open_unit_interval(x in -30.0f64..30.0) {
            let (a, b) = (sigmoid_scalar(x), sigmoid_scalar(-x));
            prop_assert!((a + b - 1.0).abs() < 1e-15);
            prop_assert!(a > 0.0 && a < 1.0);
        }
    }
}
