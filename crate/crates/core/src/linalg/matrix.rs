use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Products with at least this many multiply-adds are split across threads.
const PAR_THRESHOLD: usize = 1 << 18;

/// Row-major dense matrix with at least one row and one column.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    /// Wraps a row-major buffer, rejecting empty shapes, short buffers and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, values: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if values.len() != rows * cols {
            return Err(Error::BufferLength {
                rows,
                cols,
                len: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix construction"));
        }
        Ok(Self { rows, cols, values })
    }

    /// Builds from nested rows; every row must have the same length.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    op: "from_rows",
                    left: (0, cols),
                    right: (i, row.len()),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, values)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        Self::new(rows, cols, values)
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![T::zero(); rows * cols])
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    /// Single-column matrix.
    pub fn column_vector(values: &[T]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    /// Internal constructor for buffers produced by finite arithmetic on
    /// finite inputs. Shape is still checked.
    pub(crate) fn from_raw(rows: usize, cols: usize, values: Vec<T>) -> Self {
        debug_assert!(rows > 0 && cols > 0 && values.len() == rows * cols);
        Self { rows, cols, values }
    }

    /// Re-checks finiteness after arithmetic that could overflow.
    pub(crate) fn checked(self, op: &'static str) -> Result<Self> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(self)
        } else {
            Err(Error::NonFinite(op))
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn transpose(&self) -> Self {
        let mut out = Vec::with_capacity(self.values.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self.get(i, j));
            }
        }
        Self::from_raw(self.cols, self.rows, out)
    }

    /// Elementwise map; errors if the map produces a non-finite value.
    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::from_raw(self.rows, self.cols, self.values.iter().map(|&v| f(v)).collect())
            .checked("map")
    }

    pub fn scale(&self, c: T) -> Result<Self> {
        self.map(|v| v * c)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other, "sub")?;
        Ok(Self::from_raw(
            self.rows,
            self.cols,
            self.values.iter().zip(&other.values).map(|(&a, &b)| a - b).collect(),
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other, "add")?;
        Self::from_raw(
            self.rows,
            self.cols,
            self.values.iter().zip(&other.values).map(|(&a, &b)| a + b).collect(),
        )
        .checked("add")
    }

    /// Adds `v[j]` to every entry of column `j`.
    pub fn add_row_vector(&self, v: &[T]) -> Result<Self> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                op: "add_row_vector",
                left: self.shape(),
                right: (1, v.len()),
            });
        }
        let mut out = self.clone();
        for row in out.values.chunks_mut(self.cols) {
            for (x, &b) in row.iter_mut().zip(v) {
                *x += b;
            }
        }
        out.checked("add_row_vector")
    }

    /// `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let (n, inner) = (rhs.cols, self.cols);
        let mut out = vec![T::zero(); self.rows * n];
        let kernel = |(i, out_row): (usize, &mut [T])| {
            let a_row = self.row(i);
            for (k, &a) in a_row.iter().enumerate() {
                let b_row = &rhs.values[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        };
        if self.rows * inner * n >= PAR_THRESHOLD {
            out.par_chunks_mut(n).enumerate().for_each(kernel);
        } else {
            out.chunks_mut(n).enumerate().for_each(kernel);
        }
        Self::from_raw(self.rows, n, out).checked("matmul")
    }

    /// `selfᵀ * rhs` without materializing the transpose.
    pub fn t_matmul(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows {
            return Err(Error::DimensionMismatch {
                op: "t_matmul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let (p, q) = (self.cols, rhs.cols);
        let mut out = vec![T::zero(); p * q];
        let kernel = |(i, out_row): (usize, &mut [T])| {
            for t in 0..self.rows {
                let a = self.values[t * p + i];
                let b_row = rhs.row(t);
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        };
        if self.rows * p * q >= PAR_THRESHOLD {
            out.par_chunks_mut(q).enumerate().for_each(kernel);
        } else {
            out.chunks_mut(q).enumerate().for_each(kernel);
        }
        Self::from_raw(p, q, out).checked("t_matmul")
    }

    /// `self * rhsᵀ`, row-by-row dot products.
    pub fn matmul_t(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.cols {
            return Err(Error::DimensionMismatch {
                op: "matmul_t",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let s = rhs.rows;
        let mut out = vec![T::zero(); self.rows * s];
        let kernel = |(i, out_row): (usize, &mut [T])| {
            let a_row = self.row(i);
            for (j, o) in out_row.iter_mut().enumerate() {
                *o = dot(a_row, rhs.row(j));
            }
        };
        if self.rows * self.cols * s >= PAR_THRESHOLD {
            out.par_chunks_mut(s).enumerate().for_each(kernel);
        } else {
            out.chunks_mut(s).enumerate().for_each(kernel);
        }
        Self::from_raw(self.rows, s, out).checked("matmul_t")
    }

    /// Horizontal concatenation `[A B ...]`; all blocks share a row count.
    pub fn hconcat(blocks: &[&Self]) -> Result<Self> {
        let first = blocks.first().ok_or(Error::EmptyMatrix { rows: 0, cols: 0 })?;
        let rows = first.rows;
        for b in blocks {
            if b.rows != rows {
                return Err(Error::DimensionMismatch {
                    op: "hconcat",
                    left: first.shape(),
                    right: b.shape(),
                });
            }
        }
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for b in blocks {
                values.extend_from_slice(b.row(i));
            }
        }
        Ok(Self::from_raw(rows, cols, values))
    }

    /// Copies out the given rows, in order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::DimensionMismatch {
                    op: "select_rows",
                    left: self.shape(),
                    right: (i, self.cols),
                });
            }
            values.extend_from_slice(self.row(i));
        }
        Self::new(indices.len(), self.cols, values)
    }

    /// Copies out a contiguous row block `start..end`.
    pub fn row_block(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.rows {
            return Err(Error::DimensionMismatch {
                op: "row_block",
                left: self.shape(),
                right: (start, end),
            });
        }
        Ok(Self::from_raw(
            end - start,
            self.cols,
            self.values[start * self.cols..end * self.cols].to_vec(),
        ))
    }

    pub fn frobenius_norm(&self) -> T {
        self.values.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.same_shape(other, "max_abs_diff")?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs())))
    }

    fn same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}
