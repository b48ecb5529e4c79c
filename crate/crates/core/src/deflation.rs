//! Deflation projectors and the deflated solve.
//!
//! With `M = Zᴴ A Z`:
//!
//! ```text
//! P  = I - A Z M⁻¹ Zᴴ
//! P̃ = I - Z M⁻¹ Zᴴ A          (P A = A P̃)
//! ```
//!
//! The solution of `A x = b` splits as `x = Z M⁻¹ Zᴴ b + P̃ x#` where `x#`
//! is any solution of the singular but consistent system `P A x# = P b`.
//! Neither projector is ever formed; each application costs `O(N m)` plus a
//! pair of `m × m` triangular solves against the factored `M`.

use crate::error::{Error, Result};
use crate::krylov::{KrylovMethod, LinearOperator, SolveReport, SolverConfig};
use crate::numcore::{
    axpy, check_len, hdot_unchecked, norm2, DenseMatrix, LuFactors, Scalar, ZERO,
};

/// Relative pivot floor for the factorization of `M`.
pub const COARSE_PIVOT_TOL: f64 = 1e-14;

/// `Z`, `A Z` and the LU factors of `M = Zᴴ A Z` for a fixed operator.
#[derive(Debug, Clone)]
pub struct DeflationBasis<O> {
    op: O,
    z: DenseMatrix,
    az: DenseMatrix,
    m: DenseMatrix,
    m_lu: LuFactors,
}

impl<O: LinearOperator> DeflationBasis<O> {
    /// Computes `A Z` once, assembles `M = Zᴴ (A Z)` and factorizes it.
    pub fn build(op: O, z: DenseMatrix) -> Result<Self> {
        check_len("deflation basis rows", op.dim(), z.rows())?;
        if z.cols() == 0 {
            return Err(Error::InvalidArgument("deflation basis needs at least one column".into()));
        }
        z.ensure_finite("deflation basis")?;
        let mut az = DenseMatrix::zeros(z.rows(), z.cols());
        for j in 0..z.cols() {
            op.apply(z.col(j), az.col_mut(j));
        }
        az.ensure_finite("A Z")?;
        let m = z.adjoint_mul(&az)?;
        let m_lu = match LuFactors::new(&m, COARSE_PIVOT_TOL) {
            Ok(lu) => lu,
            Err(Error::Singular { column, pivot }) => {
                return Err(Error::SingularCoarseMatrix { column, pivot })
            }
            Err(e) => return Err(e),
        };
        Ok(Self { op, z, az, m, m_lu })
    }

    pub fn operator(&self) -> &O {
        &self.op
    }

    pub fn z(&self) -> &DenseMatrix {
        &self.z
    }

    pub fn az(&self) -> &DenseMatrix {
        &self.az
    }

    /// The coarse matrix `M = Zᴴ A Z`.
    pub fn coarse_matrix(&self) -> &DenseMatrix {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.z.rows()
    }

    pub fn rank(&self) -> usize {
        self.z.cols()
    }

    /// `M⁻¹ Zᴴ v`
    fn coarse_solve(&self, v: &[Scalar]) -> Vec<Scalar> {
        let mut c: Vec<Scalar> = self.z.columns().map(|zj| hdot_unchecked(zj, v)).collect();
        self.m_lu.solve_in_place(&mut c);
        c
    }

    /// `x₁ = Z M⁻¹ Zᴴ b`
    pub fn coarse_correction(&self, b: &[Scalar]) -> Result<Vec<Scalar>> {
        check_len("coarse correction", self.dim(), b.len())?;
        let c = self.coarse_solve(b);
        let mut x = vec![ZERO; self.dim()];
        for (cj, zj) in c.iter().zip(self.z.columns()) {
            axpy(*cj, zj, &mut x);
        }
        Ok(x)
    }

    /// `P v = v - (A Z) M⁻¹ (Zᴴ v)`
    pub fn apply_p(&self, v: &[Scalar]) -> Result<Vec<Scalar>> {
        check_len("apply P", self.dim(), v.len())?;
        let mut out = v.to_vec();
        self.apply_p_in_place(&mut out);
        Ok(out)
    }

    fn apply_p_in_place(&self, v: &mut [Scalar]) {
        let c = self.coarse_solve(v);
        for (cj, azj) in c.iter().zip(self.az.columns()) {
            axpy(-*cj, azj, v);
        }
    }

    /// `Pᴴ v = v - Z M⁻ᴴ (A Z)ᴴ v`
    fn apply_p_adjoint_in_place(&self, v: &mut [Scalar]) {
        let mut c: Vec<Scalar> = self.az.columns().map(|c| hdot_unchecked(c, v)).collect();
        self.m_lu.solve_adjoint_in_place(&mut c);
        for (cj, zj) in c.iter().zip(self.z.columns()) {
            axpy(-*cj, zj, v);
        }
    }

    /// `P̃ v = v - Z M⁻¹ Zᴴ (A v)`
    pub fn apply_ptilde(&self, v: &[Scalar]) -> Result<Vec<Scalar>> {
        check_len("apply P~", self.dim(), v.len())?;
        let av = self.op.apply_vec(v);
        let c = self.coarse_solve(&av);
        let mut out = v.to_vec();
        for (cj, zj) in c.iter().zip(self.z.columns()) {
            axpy(-*cj, zj, &mut out);
        }
        Ok(out)
    }

    /// The deflated operator `v ↦ P (A v)`.
    pub fn deflated_operator(&self) -> DeflatedOperator<'_, O> {
        DeflatedOperator { basis: self }
    }
}

/// `P A` as a [`LinearOperator`]; adjoint `Aᴴ Pᴴ` is available whenever the
/// underlying operator has one.
#[derive(Debug, Clone, Copy)]
pub struct DeflatedOperator<'b, O> {
    basis: &'b DeflationBasis<O>,
}

impl<O: LinearOperator> LinearOperator for DeflatedOperator<'_, O> {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn apply(&self, x: &[Scalar], y: &mut [Scalar]) {
        self.basis.op.apply(x, y);
        self.basis.apply_p_in_place(y);
    }

    fn apply_adjoint(&self, x: &[Scalar], y: &mut [Scalar]) -> Result<()> {
        let mut t = x.to_vec();
        self.basis.apply_p_adjoint_in_place(&mut t);
        self.basis.op.apply_adjoint(&t, y)
    }

    fn has_adjoint(&self) -> bool {
        self.basis.op.has_adjoint()
    }
}

#[derive(Debug, Clone)]
pub struct DeflatedSolution {
    pub x: Vec<Scalar>,
    /// `Z M⁻¹ Zᴴ b`
    pub x1: Vec<Scalar>,
    /// `P̃ x#`
    pub x2: Vec<Scalar>,
    /// Report of the inner solve of `P A x# = P b`.
    pub inner_report: SolveReport,
    /// `‖P b - P A x#‖ / ‖P b‖`
    pub relres1: f64,
    /// `‖b - A x‖ / ‖b‖`
    pub relres2: f64,
}

/// Deflated Krylov solve: coarse correction, inner solve of `P A x# = P b`,
/// then `x = x₁ + P̃ x#`.
///
/// Inner non-convergence is not an error; `x` is assembled regardless and the
/// inner report carries the flag.
pub fn deflated_solve<O: LinearOperator>(
    basis: &DeflationBasis<O>,
    b: &[Scalar],
    inner: KrylovMethod,
    cfg: &SolverConfig,
) -> Result<DeflatedSolution> {
    check_len("deflated solve rhs", basis.dim(), b.len())?;
    let x1 = basis.coarse_correction(b)?;
    let pb = basis.apply_p(b)?;
    let pa = basis.deflated_operator();
    let inner_report = inner.solve(&pa, &pb, cfg)?;
    let x_sharp = &inner_report.x;

    let pbn = norm2(&pb);
    let mut r1 = pa.apply_vec(x_sharp);
    for (ri, pbi) in r1.iter_mut().zip(&pb) {
        *ri = pbi - *ri;
    }
    let relres1 = if pbn > 0.0 { norm2(&r1) / pbn } else { norm2(&r1) };

    let x2 = basis.apply_ptilde(x_sharp)?;
    let x: Vec<Scalar> = x1.iter().zip(&x2).map(|(a, b)| a + b).collect();

    let mut r2 = basis.op.apply_vec(&x);
    for (ri, bi) in r2.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let bn = norm2(b);
    let relres2 = if bn > 0.0 { norm2(&r2) / bn } else { norm2(&r2) };

    Ok(DeflatedSolution {
        x,
        x1,
        x2,
        inner_report,
        relres1,
        relres2,
    })
}
