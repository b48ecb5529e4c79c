use std::ops::{Index, IndexMut};

use super::{check_len, hdot_unchecked, Scalar, ZERO};
use crate::error::{Error, Result};

/// Column-major dense complex matrix.
///
/// Columns are contiguous so deflation bases and quadrature accumulators can
/// be consumed column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = super::ONE;
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<Scalar>) -> Result<Self> {
        check_len("dense data length", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Scalar) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from equal-length columns.
    pub fn from_columns(rows: usize, columns: &[Vec<Scalar>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            check_len("column length", rows, c.len())?;
            data.extend_from_slice(c);
        }
        Ok(Self {
            rows,
            cols: columns.len(),
            data,
        })
    }

    pub fn from_diagonal(diag: &[Scalar]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Scalar] {
        &self.data
    }

    pub fn col(&self, j: usize) -> &[Scalar] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [Scalar] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[Scalar]> {
        // chunks_exact panics on a zero chunk size
        let rows = self.rows.max(1);
        self.data.chunks_exact(rows).take(if self.rows == 0 { 0 } else { self.cols })
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let (left, right) = self.data.split_at_mut(hi * self.rows);
        left[lo * self.rows..(lo + 1) * self.rows].swap_with_slice(&mut right[..self.rows]);
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(j * self.rows + a, j * self.rows + b);
        }
    }

    /// The leading `k` columns as a new matrix.
    pub fn leading_columns(&self, k: usize) -> Self {
        assert!(k <= self.cols);
        Self {
            rows: self.rows,
            cols: k,
            data: self.data[..k * self.rows].to_vec(),
        }
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.rows);
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        Self {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }

    pub fn matvec(&self, x: &[Scalar]) -> Result<Vec<Scalar>> {
        check_len("dense matvec", self.cols, x.len())?;
        let mut y = vec![ZERO; self.rows];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    pub(crate) fn matvec_into(&self, x: &[Scalar], y: &mut [Scalar]) {
        y.iter_mut().for_each(|v| *v = ZERO);
        for (j, xj) in x.iter().enumerate() {
            if *xj != ZERO {
                super::axpy(*xj, self.col(j), y);
            }
        }
    }

    /// `self^H x`
    pub fn adjoint_matvec(&self, x: &[Scalar]) -> Result<Vec<Scalar>> {
        check_len("dense adjoint matvec", self.rows, x.len())?;
        Ok(self.columns().map(|c| hdot_unchecked(c, x)).collect())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        check_len("dense matmul", self.cols, other.rows)?;
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let (src, dst) = (other.col(j), &mut out.data[j * self.rows..(j + 1) * self.rows]);
            for (k, bkj) in src.iter().enumerate() {
                if *bkj != ZERO {
                    super::axpy(*bkj, self.col(k), dst);
                }
            }
        }
        Ok(out)
    }

    /// `self^H other`
    pub fn adjoint_mul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        check_len("dense adjoint matmul", self.rows, other.rows)?;
        Ok(DenseMatrix::from_fn(self.cols, other.cols, |i, j| {
            hdot_unchecked(self.col(i), other.col(j))
        }))
    }

    pub fn adjoint(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn frobenius_norm(&self) -> f64 {
        super::norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        check_len("dense sub rows", self.rows, other.rows)?;
        check_len("dense sub cols", self.cols, other.cols)?;
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: super::sub(&self.data, &other.data),
        })
    }

    pub fn scaled(&self, alpha: Scalar) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| alpha * z).collect(),
        }
    }

    pub(crate) fn ensure_finite(&self, context: &'static str) -> Result<()> {
        if super::all_finite(&self.data) {
            Ok(())
        } else {
            Err(Error::NonFinite(context))
        }
    }

    /// Accumulates `alpha * other` into `self`.
    pub fn add_scaled(&mut self, alpha: Scalar, other: &DenseMatrix) -> Result<()> {
        check_len("dense add rows", self.rows, other.rows)?;
        check_len("dense add cols", self.cols, other.cols)?;
        super::axpy(alpha, &other.data, &mut self.data);
        Ok(())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = Scalar;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Scalar {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Scalar {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}
