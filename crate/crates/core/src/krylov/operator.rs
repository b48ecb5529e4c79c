use crate::error::{Error, Result};
use crate::numcore::{DenseMatrix, Scalar, SparseMatrix, ZERO};

/// Matrix-free linear map `y = A x` on `C^N`.
///
/// `apply_adjoint` is optional; solvers that need `A^H` (BiCG) report
/// [`Error::AdjointUnavailable`] when it is missing.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`. `x` and `y` never alias.
    fn apply(&self, x: &[Scalar], y: &mut [Scalar]);

    /// `y = A^H x`.
    fn apply_adjoint(&self, _x: &[Scalar], _y: &mut [Scalar]) -> Result<()> {
        Err(Error::AdjointUnavailable)
    }

    fn has_adjoint(&self) -> bool {
        false
    }

    fn apply_vec(&self, x: &[Scalar]) -> Vec<Scalar> {
        let mut y = vec![ZERO; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[Scalar], y: &mut [Scalar]) {
        (**self).apply(x, y)
    }

    fn apply_adjoint(&self, x: &[Scalar], y: &mut [Scalar]) -> Result<()> {
        (**self).apply_adjoint(x, y)
    }

    fn has_adjoint(&self) -> bool {
        (**self).has_adjoint()
    }
}

/// A square sparse matrix together with an explicit copy of its conjugate
/// transpose, so adjoint products are row-oriented too.
#[derive(Debug, Clone)]
pub struct CsrOperator<'a> {
    a: &'a SparseMatrix,
    a_h: SparseMatrix,
}

impl<'a> CsrOperator<'a> {
    pub fn new(a: &'a SparseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidArgument(format!(
                "operator must be square, got {}x{}",
                a.n_rows(),
                a.n_cols()
            )));
        }
        Ok(Self {
            a,
            a_h: a.adjoint(),
        })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        self.a
    }
}

impl LinearOperator for CsrOperator<'_> {
    fn dim(&self) -> usize {
        self.a.n_rows()
    }

    fn apply(&self, x: &[Scalar], y: &mut [Scalar]) {
        self.a.spmv_into(x, y)
    }

    fn apply_adjoint(&self, x: &[Scalar], y: &mut [Scalar]) -> Result<()> {
        self.a_h.spmv_into(x, y);
        Ok(())
    }

    fn has_adjoint(&self) -> bool {
        true
    }
}

/// `σ I - A` for a complex shift `σ`.
#[derive(Debug, Clone)]
pub struct ShiftedOperator<O> {
    inner: O,
    shift: Scalar,
}

impl<O: LinearOperator> ShiftedOperator<O> {
    pub fn new(inner: O, shift: Scalar) -> Self {
        Self { inner, shift }
    }

    pub fn shift(&self) -> Scalar {
        self.shift
    }
}

impl<O: LinearOperator> LinearOperator for ShiftedOperator<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, x: &[Scalar], y: &mut [Scalar]) {
        self.inner.apply(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.shift * xi - *yi;
        }
    }

    fn apply_adjoint(&self, x: &[Scalar], y: &mut [Scalar]) -> Result<()> {
        self.inner.apply_adjoint(x, y)?;
        let s = self.shift.conj();
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = s * xi - *yi;
        }
        Ok(())
    }

    fn has_adjoint(&self) -> bool {
        self.inner.has_adjoint()
    }
}

/// Dense matrix as an operator; used for small problems and test oracles.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    a: DenseMatrix,
    a_h: DenseMatrix,
}

impl DenseOperator {
    pub fn new(a: DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidArgument("operator must be square".into()));
        }
        let a_h = a.adjoint();
        Ok(Self { a, a_h })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.a.rows()
    }

    fn apply(&self, x: &[Scalar], y: &mut [Scalar]) {
        self.a.matvec_into(x, y)
    }

    fn apply_adjoint(&self, x: &[Scalar], y: &mut [Scalar]) -> Result<()> {
        self.a_h.matvec_into(x, y);
        Ok(())
    }

    fn has_adjoint(&self) -> bool {
        true
    }
}

/// `diag(d)`.
#[derive(Debug, Clone)]
pub struct DiagonalOperator {
    diag: Vec<Scalar>,
}

impl DiagonalOperator {
    pub fn new(diag: Vec<Scalar>) -> Self {
        Self { diag }
    }
}

impl LinearOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[Scalar], y: &mut [Scalar]) {
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.diag) {
            *yi = d * xi;
        }
    }

    fn apply_adjoint(&self, x: &[Scalar], y: &mut [Scalar]) -> Result<()> {
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.diag) {
            *yi = d.conj() * xi;
        }
        Ok(())
    }

    fn has_adjoint(&self) -> bool {
        true
    }
}
