use super::{check_len, DenseMatrix, Scalar, ZERO};
use crate::error::{Error, Result};

/// Dense LU factorization with partial (row) pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: DenseMatrix,
    /// `piv[k]` is the row swapped into position `k` at step `k`.
    piv: Vec<usize>,
}

impl LuFactors {
    /// Factorizes `a`. Fails when a pivot magnitude drops to
    /// `rel_pivot_tol * max|a_ij|` or below.
    pub fn new(a: &DenseMatrix, rel_pivot_tol: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidArgument(format!(
                "LU needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        a.ensure_finite("LU input")?;
        let n = a.rows();
        let threshold = rel_pivot_tol * a.max_abs();
        let mut lu = a.clone();
        let mut piv = Vec::with_capacity(n);
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= threshold || pmax == 0.0 {
                return Err(Error::Singular {
                    column: k,
                    pivot: pmax,
                });
            }
            piv.push(p);
            lu.swap_rows(k, p);
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                lu[(i, k)] /= pivot;
            }
            for j in k + 1..n {
                let ukj = lu[(k, j)];
                if ukj == ZERO {
                    continue;
                }
                for i in k + 1..n {
                    let lik = lu[(i, k)];
                    lu[(i, j)] -= lik * ukj;
                }
            }
        }
        Ok(Self { lu, piv })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    /// Smallest pivot magnitude `min |u_kk|`.
    pub fn min_pivot(&self) -> f64 {
        (0..self.dim())
            .map(|k| self.lu[(k, k)].norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[Scalar]) -> Result<Vec<Scalar>> {
        check_len("LU solve", self.dim(), b.len())?;
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    pub(crate) fn solve_in_place(&self, x: &mut [Scalar]) {
        let n = self.dim();
        for (k, &p) in self.piv.iter().enumerate() {
            x.swap(k, p);
        }
        for j in 0..n {
            let xj = x[j];
            if xj != ZERO {
                for i in j + 1..n {
                    x[i] -= self.lu[(i, j)] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.lu[(j, j)];
            let xj = x[j];
            if xj != ZERO {
                for i in 0..j {
                    x[i] -= self.lu[(i, j)] * xj;
                }
            }
        }
    }

    /// Solves `A^H x = b`.
    pub fn solve_adjoint(&self, b: &[Scalar]) -> Result<Vec<Scalar>> {
        check_len("LU adjoint solve", self.dim(), b.len())?;
        let mut x = b.to_vec();
        self.solve_adjoint_in_place(&mut x);
        Ok(x)
    }

    pub(crate) fn solve_adjoint_in_place(&self, x: &mut [Scalar]) {
        // A^H = U^H L^H P
        let n = self.dim();
        for j in 0..n {
            let mut acc = x[j];
            for i in 0..j {
                acc -= self.lu[(i, j)].conj() * x[i];
            }
            x[j] = acc / self.lu[(j, j)].conj();
        }
        for j in (0..n).rev() {
            let mut acc = x[j];
            for i in j + 1..n {
                acc -= self.lu[(i, j)].conj() * x[i];
            }
            x[j] = acc;
        }
        for (k, &p) in self.piv.iter().enumerate().rev() {
            x.swap(k, p);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(n, n, |_, _| Scalar::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn solves_and_adjoint_solves() {
        let a = random_matrix(7, 3);
        let lu = LuFactors::new(&a, 1e-14).unwrap();
        let x: Vec<Scalar> = (0..7).map(|i| Scalar::new(i as f64, 1.0 - i as f64)).collect();
        let b = a.matvec(&x).unwrap();
        let got = lu.solve(&b).unwrap();
        assert!(super::super::rel_diff(&got, &x) < 1e-12);

        let bh = a.adjoint().matvec(&x).unwrap();
        let got = lu.solve_adjoint(&bh).unwrap();
        assert!(super::super::rel_diff(&got, &x) < 1e-12);
    }

    #[test]
    fn needs_pivoting() {
        let a = DenseMatrix::from_fn(2, 2, |i, j| Scalar::new(if i == j { 0.0 } else { 1.0 }, 0.0));
        let lu = LuFactors::new(&a, 1e-14).unwrap();
        let x = lu.solve(&[Scalar::new(2.0, 0.0), Scalar::new(3.0, 0.0)]).unwrap();
        assert_eq!(x, vec![Scalar::new(3.0, 0.0), Scalar::new(2.0, 0.0)]);
    }

    #[test]
    fn singular_is_rejected() {
        let a = DenseMatrix::from_fn(2, 2, |_, _| Scalar::new(1.0, 0.0));
        assert!(matches!(LuFactors::new(&a, 1e-14), Err(Error::Singular { column: 1, .. })));
    }
}
