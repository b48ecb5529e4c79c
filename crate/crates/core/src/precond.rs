//! ILU(0) factorization and the two-sided preconditioned operator
//! `Ã = L⁻¹ Pr A U⁻¹`.
//!
//! The factorization is unpivoted (`Pr` is the identity unless a permutation is
//! supplied). Pivots that come out numerically zero are replaced by `1` so that
//! `U` stays invertible; the affected rows are recorded.

use log::warn;

use crate::error::{Error, Result};
use crate::krylov::LinearOperator;
use crate::numcore::{check_len, Scalar, SparseMatrix, ONE, ZERO};

/// Relative threshold (against `max |a_ij|`) below which a pivot is patched.
pub const PIVOT_PATCH_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct Ilu0Factors {
    /// Unit lower triangle, diagonal stored explicitly.
    pub l: SparseMatrix,
    pub u: SparseMatrix,
    /// Row permutation: `(Pr x)_i = x[perm[i]]`.
    pub perm: Vec<usize>,
    /// Rows whose `u_ii` was replaced by `1`.
    pub patched_pivots: Vec<usize>,
}

impl Ilu0Factors {
    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// `x ↦ Pr x`
    pub fn permute(&self, x: &[Scalar]) -> Vec<Scalar> {
        self.perm.iter().map(|&p| x[p]).collect()
    }

    /// `x ↦ Prᵀ x`
    pub fn permute_transpose(&self, x: &[Scalar]) -> Vec<Scalar> {
        let mut y = vec![ZERO; x.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            y[p] = x[i];
        }
        y
    }

    /// `b ↦ L⁻¹ Pr b`
    pub fn transform_rhs(&self, b: &[Scalar]) -> Result<Vec<Scalar>> {
        check_len("ILU rhs", self.dim(), b.len())?;
        let mut y = self.permute(b);
        solve_lower(&self.l, &mut y);
        Ok(y)
    }

    /// `x̃ ↦ U⁻¹ x̃`
    pub fn back_map(&self, x: &[Scalar]) -> Result<Vec<Scalar>> {
        check_len("ILU back-map", self.dim(), x.len())?;
        let mut y = x.to_vec();
        solve_upper(&self.u, &mut y);
        Ok(y)
    }
}

/// ILU(0) of `a` with identity row permutation.
pub fn ilu0_factor(a: &SparseMatrix) -> Result<Ilu0Factors> {
    let perm: Vec<usize> = (0..a.n_rows()).collect();
    ilu0_factor_permuted(a, perm)
}

/// ILU(0) of `Pr a` for a caller-supplied row permutation.
pub fn ilu0_factor_permuted(a: &SparseMatrix, perm: Vec<usize>) -> Result<Ilu0Factors> {
    if !a.is_square() {
        return Err(Error::InvalidArgument("ILU(0) needs a square matrix".into()));
    }
    let n = a.n_rows();
    let pa = a.permute_rows(&perm)?;
    let threshold = PIVOT_PATCH_TOL * a.max_abs();

    // pattern of Pr·A plus the diagonal
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols: Vec<usize> = Vec::with_capacity(pa.nnz() + n);
    let mut vals: Vec<Scalar> = Vec::with_capacity(pa.nnz() + n);
    let mut diag_pos = vec![0usize; n];
    row_ptr.push(0);
    for i in 0..n {
        let (c, v) = pa.row(i);
        let mut inserted = false;
        for (&j, &x) in c.iter().zip(v) {
            if !inserted && j > i {
                diag_pos[i] = cols.len();
                cols.push(i);
                vals.push(ZERO);
                inserted = true;
            }
            if j == i {
                diag_pos[i] = cols.len();
                inserted = true;
            }
            cols.push(j);
            vals.push(x);
        }
        if !inserted {
            diag_pos[i] = cols.len();
            cols.push(i);
            vals.push(ZERO);
        }
        row_ptr.push(cols.len());
    }

    // IKJ elimination restricted to the pattern
    let mut marker: Vec<usize> = vec![usize::MAX; n];
    let mut patched = Vec::new();
    for i in 0..n {
        let (start, end) = (row_ptr[i], row_ptr[i + 1]);
        for k in start..end {
            marker[cols[k]] = k;
        }
        for kk in start..diag_pos[i] {
            let k = cols[kk];
            let lik = vals[kk] / vals[diag_pos[k]];
            vals[kk] = lik;
            for kj in diag_pos[k] + 1..row_ptr[k + 1] {
                let pos = marker[cols[kj]];
                if pos != usize::MAX {
                    let ukj = vals[kj];
                    vals[pos] -= lik * ukj;
                }
            }
        }
        if vals[diag_pos[i]].norm() < threshold || vals[diag_pos[i]].norm() == 0.0 {
            vals[diag_pos[i]] = ONE;
            patched.push(i);
        }
        for k in start..end {
            marker[cols[k]] = usize::MAX;
        }
    }
    if !patched.is_empty() {
        warn!("ILU(0): {} zero pivot(s) replaced by 1", patched.len());
    }

    let mut l_trip = Vec::with_capacity(vals.len());
    let mut u_trip = Vec::with_capacity(vals.len());
    for i in 0..n {
        for k in row_ptr[i]..row_ptr[i + 1] {
            let j = cols[k];
            if j < i {
                l_trip.push((i, j, vals[k]));
            } else {
                u_trip.push((i, j, vals[k]));
            }
        }
        l_trip.push((i, i, ONE));
    }
    Ok(Ilu0Factors {
        l: SparseMatrix::from_triplets(n, n, l_trip)?,
        u: SparseMatrix::from_triplets(n, n, u_trip)?,
        perm,
        patched_pivots: patched,
    })
}

/// Forward substitution with a lower-triangular CSR matrix (diagonal last in
/// each row).
pub(crate) fn solve_lower(l: &SparseMatrix, x: &mut [Scalar]) {
    for i in 0..l.n_rows() {
        let (c, v) = l.row(i);
        let mut acc = x[i];
        let mut diag = ONE;
        for (&j, &lij) in c.iter().zip(v) {
            if j < i {
                acc -= lij * x[j];
            } else if j == i {
                diag = lij;
            }
        }
        x[i] = acc / diag;
    }
}

/// Back substitution with an upper-triangular CSR matrix.
pub(crate) fn solve_upper(u: &SparseMatrix, x: &mut [Scalar]) {
    for i in (0..u.n_rows()).rev() {
        let (c, v) = u.row(i);
        let mut acc = x[i];
        let mut diag = ONE;
        for (&j, &uij) in c.iter().zip(v) {
            if j > i {
                acc -= uij * x[j];
            } else if j == i {
                diag = uij;
            }
        }
        x[i] = acc / diag;
    }
}

/// `v ↦ L⁻¹ Pr A U⁻¹ v`, with its adjoint `U⁻ᴴ Aᴴ Prᵀ L⁻ᴴ`.
#[derive(Debug, Clone)]
pub struct Ilu0Operator<'a> {
    a: &'a SparseMatrix,
    a_h: SparseMatrix,
    factors: &'a Ilu0Factors,
    l_h: SparseMatrix,
    u_h: SparseMatrix,
}

pub fn ilu0_operator<'a>(factors: &'a Ilu0Factors, a: &'a SparseMatrix) -> Result<Ilu0Operator<'a>> {
    check_len("ILU factors vs matrix", a.n_rows(), factors.dim())?;
    if !a.is_square() {
        return Err(Error::InvalidArgument("ILU operator needs a square matrix".into()));
    }
    Ok(Ilu0Operator {
        a,
        a_h: a.adjoint(),
        factors,
        l_h: factors.l.adjoint(),
        u_h: factors.u.adjoint(),
    })
}

impl Ilu0Operator<'_> {
    pub fn factors(&self) -> &Ilu0Factors {
        self.factors
    }
}

impl LinearOperator for Ilu0Operator<'_> {
    fn dim(&self) -> usize {
        self.a.n_rows()
    }

    fn apply(&self, x: &[Scalar], y: &mut [Scalar]) {
        let mut t = x.to_vec();
        solve_upper(&self.factors.u, &mut t);
        let mut s = vec![ZERO; t.len()];
        self.a.spmv_into(&t, &mut s);
        for (yi, &p) in y.iter_mut().zip(&self.factors.perm) {
            *yi = s[p];
        }
        solve_lower(&self.factors.l, y);
    }

    fn apply_adjoint(&self, x: &[Scalar], y: &mut [Scalar]) -> Result<()> {
        let mut t = x.to_vec();
        solve_upper(&self.l_h, &mut t);
        let s = self.factors.permute_transpose(&t);
        self.a_h.spmv_into(&s, y);
        solve_lower(&self.u_h, y);
        Ok(())
    }

    fn has_adjoint(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::{norm2, randn_vector, rel_diff, sub, DenseMatrix, LuFactors};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn r(x: f64) -> Scalar {
        Scalar::new(x, 0.0)
    }

    fn random_sparse(n: usize, density: f64, seed: u64) -> SparseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, r(6.0 + rng.gen::<f64>())));
            for j in 0..n {
                if j != i && rng.gen::<f64>() < density {
                    trip.push((i, j, Scalar::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
                }
            }
        }
        SparseMatrix::from_triplets(n, n, trip).unwrap()
    }

    #[test]
    fn tridiagonal_is_exact_lu() {
        let n = 12;
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, r(4.0 + i as f64 * 0.1)));
            if i + 1 < n {
                trip.push((i, i + 1, r(-1.3)));
                trip.push((i + 1, i, Scalar::new(-0.7, 0.2)));
            }
        }
        let a = SparseMatrix::from_triplets(n, n, trip).unwrap();
        let f = ilu0_factor(&a).unwrap();
        assert!(f.patched_pivots.is_empty());
        let lu = f.l.to_dense().matmul(&f.u.to_dense()).unwrap();
        let err = lu.sub(&a.to_dense()).unwrap().frobenius_norm();
        assert!(err <= 1e-13 * a.frobenius_norm());
    }

    #[test]
    fn zero_pivot_is_patched() {
        let a = SparseMatrix::from_triplets(3, 3, [(0, 0, r(2.0)), (2, 2, r(3.0))]).unwrap();
        let f = ilu0_factor(&a).unwrap();
        let d: Vec<Scalar> = (0..3).map(|i| f.u.get(i, i).unwrap()).collect();
        assert_eq!(d, vec![r(2.0), r(1.0), r(3.0)]);
        assert_eq!(f.patched_pivots, vec![1]);

        // explicit zero on the diagonal behaves the same
        let a = SparseMatrix::from_triplets(3, 3, [(0, 0, r(2.0)), (1, 1, ZERO), (2, 2, r(3.0))]).unwrap();
        assert_eq!(ilu0_factor(&a).unwrap().patched_pivots, vec![1]);
    }

    #[test]
    fn pattern_residual_vanishes() {
        let a = random_sparse(10, 0.3, 4);
        let f = ilu0_factor(&a).unwrap();
        let lu = f.l.to_dense().matmul(&f.u.to_dense()).unwrap();
        let scale = a.max_abs();
        for (i, j, v) in a.triplets() {
            assert!((lu[(i, j)] - v).norm() <= 1e-12 * scale, "({i},{j})");
        }
        // factors live on the pattern of A plus the diagonal
        for (i, j, _) in f.l.triplets().chain(f.u.triplets()) {
            assert!(i == j || a.get(i, j).is_some());
        }
    }

    #[test]
    fn pattern_residual_with_permutation() {
        let a = random_sparse(9, 0.35, 8);
        let perm = vec![3, 0, 1, 2, 8, 4, 5, 7, 6];
        let f = ilu0_factor_permuted(&a, perm.clone()).unwrap();
        let pa = a.permute_rows(&perm).unwrap();
        let lu = f.l.to_dense().matmul(&f.u.to_dense()).unwrap();
        for (i, j, v) in pa.triplets() {
            if !f.patched_pivots.contains(&i) {
                assert!((lu[(i, j)] - v).norm() <= 1e-12 * a.max_abs());
            }
        }
    }

    #[test]
    fn triangular_solves_invert() {
        let a = random_sparse(15, 0.25, 5);
        let f = ilu0_factor(&a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let v = randn_vector(&mut rng, 15);
        let mut lv = f.l.spmv(&v).unwrap();
        solve_lower(&f.l, &mut lv);
        assert!(rel_diff(&lv, &v) <= 1e-13);
        let mut uv = f.u.spmv(&v).unwrap();
        solve_upper(&f.u, &mut uv);
        assert!(rel_diff(&uv, &v) <= 1e-13);
    }

    #[test]
    fn full_pattern_lu_product_gives_identity_action() {
        // A = L U with dense triangles: ILU(0) recovers L, U and Ã = I
        let n = 6;
        let l = DenseMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => r(0.3 * (i + j) as f64 / n as f64),
            std::cmp::Ordering::Equal => ONE,
            _ => ZERO,
        });
        let u = DenseMatrix::from_fn(n, n, |i, j| if i <= j { Scalar::new(1.0 + i as f64, 0.1 * j as f64) } else { ZERO });
        let a = SparseMatrix::from_dense(&l.matmul(&u).unwrap());
        let f = ilu0_factor(&a).unwrap();
        let op = ilu0_operator(&f, &a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v = randn_vector(&mut rng, n);
        assert!(rel_diff(&op.apply_vec(&v), &v) <= 1e-12);
    }

    #[test]
    fn operator_matches_dense_oracle() {
        let n = 14;
        let a = random_sparse(n, 0.3, 9);
        let f = ilu0_factor(&a).unwrap();
        let op = ilu0_operator(&f, &a).unwrap();
        // dense L^{-1} A U^{-1}, column by column via dense LU solves
        let l_lu = LuFactors::new(&f.l.to_dense(), 1e-14).unwrap();
        let u_lu = LuFactors::new(&f.u.to_dense(), 1e-14).unwrap();
        let ad = a.to_dense();
        for k in [0, 5, n - 1] {
            let mut e = vec![ZERO; n];
            e[k] = ONE;
            let t = u_lu.solve(&e).unwrap();
            let s = ad.matvec(&t).unwrap();
            let expected = l_lu.solve(&s).unwrap();
            assert!(rel_diff(&op.apply_vec(&e), &expected) <= 1e-12);
        }
        // adjoint consistency <y, Ã x> = <Ã^H y, x>
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = randn_vector(&mut rng, n);
        let y = randn_vector(&mut rng, n);
        let mut ahy = vec![ZERO; n];
        op.apply_adjoint(&y, &mut ahy).unwrap();
        let lhs = crate::numcore::hdot(&y, &op.apply_vec(&x)).unwrap();
        let rhs = crate::numcore::hdot(&ahy, &x).unwrap();
        assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn back_map_recovers_original_solution() {
        let n = 10;
        let a = random_sparse(n, 0.3, 11);
        let f = ilu0_factor_permuted(&a, vec![1, 0, 2, 3, 4, 5, 6, 7, 9, 8]).unwrap();
        let op = ilu0_operator(&f, &a).unwrap();
        let x_true: Vec<Scalar> = (0..n).map(|i| Scalar::new(1.0, i as f64)).collect();
        let b = a.spmv(&x_true).unwrap();
        let bt = f.transform_rhs(&b).unwrap();
        let cfg = crate::krylov::SolverConfig::new(1e-12, 100);
        let rep = crate::krylov::gmres(&op, &bt, &cfg).unwrap();
        let x = f.back_map(&rep.x).unwrap();
        // direct dense solve oracle
        let direct = LuFactors::new(&a.to_dense(), 1e-14).unwrap().solve(&b).unwrap();
        assert!(rel_diff(&x, &direct) <= 1e-8);
        assert!(norm2(&sub(&x, &x_true)) / norm2(&x_true) <= 1e-8);
    }
}
