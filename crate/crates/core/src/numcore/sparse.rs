use super::{check_len, DenseMatrix, Scalar, ONE, ZERO};
use crate::error::{Error, Result};

/// Compressed sparse row matrix.
///
/// Column indices are strictly increasing within each row. Explicit zeros are
/// allowed and kept as structural entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Scalar>,
}

impl SparseMatrix {
    /// Validates and wraps raw CSR arrays.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<Scalar>,
    ) -> Result<Self> {
        check_len("row_ptr length", n_rows + 1, row_ptr.len())?;
        if row_ptr[0] != 0 {
            return Err(Error::InvalidStructure("row_ptr[0] must be 0".into()));
        }
        if row_ptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidStructure("row_ptr must be nondecreasing".into()));
        }
        let nnz = row_ptr[n_rows];
        check_len("col_idx length", nnz, col_idx.len())?;
        check_len("values length", nnz, values.len())?;
        for i in 0..n_rows {
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.iter().any(|&c| c >= n_cols) {
                return Err(Error::InvalidStructure(format!(
                    "row {i} has a column index out of bounds"
                )));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidStructure(format!(
                    "row {i} column indices are not strictly increasing"
                )));
            }
        }
        if !super::all_finite(&values) {
            return Err(Error::NonFinite("sparse matrix values"));
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Assembles from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, Scalar)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, Scalar)> = triplets.into_iter().collect();
        for &(i, j, _) in &entries {
            if i >= n_rows || j >= n_cols {
                return Err(Error::InvalidStructure(format!(
                    "triplet ({i}, {j}) outside {n_rows}x{n_cols}"
                )));
            }
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<Scalar> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self::new(n_rows, n_cols, row_ptr, col_idx, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![ONE; n],
        }
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let trip = (0..m.rows())
            .flat_map(|i| (0..m.cols()).map(move |j| (i, j)))
            .filter(|&(i, j)| m[(i, j)] != ZERO)
            .map(|(i, j)| (i, j, m[(i, j)]));
        Self::from_triplets(m.rows(), m.cols(), trip).expect("dense entries are in range")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[Scalar] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[Scalar]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> Option<Scalar> {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).ok().map(|k| vals[k])
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Scalar)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn spmv(&self, x: &[Scalar]) -> Result<Vec<Scalar>> {
        check_len("spmv", self.n_cols, x.len())?;
        let mut y = vec![ZERO; self.n_rows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    #[inline]
    pub(crate) fn spmv_into(&self, x: &[Scalar], y: &mut [Scalar]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    fn transpose_with(&self, f: impl Fn(Scalar) -> Scalar) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![ZERO; self.nnz()];
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let dst = next[j];
                col_idx[dst] = i;
                values[dst] = f(self.values[k]);
                next[j] += 1;
            }
        }
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_ptr: row_ptr[..=self.n_cols].to_vec(),
            col_idx,
            values,
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        self.transpose_with(|v| v)
    }

    /// Conjugate transpose `A^H`.
    pub fn adjoint(&self) -> SparseMatrix {
        self.transpose_with(|v| v.conj())
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        super::norm2(&self.values)
    }

    /// Permutes rows: row `i` of the result is row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<SparseMatrix> {
        check_len("row permutation", self.n_rows, perm.len())?;
        let mut row_ptr = Vec::with_capacity(self.n_rows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        for &src in perm {
            if src >= self.n_rows {
                return Err(Error::InvalidArgument("permutation index out of range".into()));
            }
            let (c, v) = self.row(src);
            col_idx.extend_from_slice(c);
            values.extend_from_slice(v);
            row_ptr.push(col_idx.len());
        }
        SparseMatrix::new(self.n_rows, self.n_cols, row_ptr, col_idx, values)
    }
}
