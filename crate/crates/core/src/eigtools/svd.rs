//! Singular values by one-sided Jacobi and a Householder triangular factor.

use crate::numcore::{axpy, hdot_unchecked, norm2, DenseMatrix, Scalar, ZERO};

const MAX_SWEEPS: usize = 60;
const ORTHOGONALITY_TOL: f64 = 1e-15;

/// Singular values in decreasing order (`min(rows, cols)` of them).
///
/// Rotates column pairs until every pair satisfies
/// `|a_pᴴ a_q| ≤ 1e-15 ‖a_p‖ ‖a_q‖`; the column norms are then the
/// singular values. Wide matrices are handled through their adjoint.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    let mut w = if a.rows() >= a.cols() { a.clone() } else { a.adjoint() };
    let n = w.cols();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = norm2(w.col(p)).powi(2);
                let beta = norm2(w.col(q)).powi(2);
                let gamma = hdot_unchecked(w.col(p), w.col(q));
                let g = gamma.norm();
                if g == 0.0 || g <= ORTHOGONALITY_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // a_q e^{-iφ} makes the inner product real and positive
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let ap = w.col(p).to_vec();
                let aq: Vec<Scalar> = w.col(q).iter().map(|v| v * phase.conj()).collect();
                let colp = w.col_mut(p);
                for (x, (u, v)) in colp.iter_mut().zip(ap.iter().zip(&aq)) {
                    *x = c * u - s * v;
                }
                let colq = w.col_mut(q);
                for (x, (u, v)) in colq.iter_mut().zip(ap.iter().zip(&aq)) {
                    *x = s * u + c * v;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = w.columns().map(norm2).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// `σ_max / σ_min`; `+∞` when the smallest singular value is zero.
pub fn cond2(a: &DenseMatrix) -> f64 {
    let sv = singular_values(a);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// The upper triangular `R` of a Householder QR of `a` (`min(rows, cols) × cols`).
pub fn householder_r(a: &DenseMatrix) -> DenseMatrix {
    let (m, n) = (a.rows(), a.cols());
    let mut w = a.clone();
    let k_max = m.min(n);
    for k in 0..k_max {
        let x = &w.col(k)[k..];
        let xnorm = norm2(x);
        if xnorm == 0.0 {
            continue;
        }
        let x0 = x[0];
        let phase = if x0.norm() == 0.0 { Scalar::new(1.0, 0.0) } else { x0 / x0.norm() };
        let mut v = x.to_vec();
        v[0] += phase * xnorm;
        let vn = norm2(&v);
        for vi in v.iter_mut() {
            *vi /= vn;
        }
        for j in k..n {
            let col = &mut w.col_mut(j)[k..];
            let t = hdot_unchecked(&v, col) * 2.0;
            axpy(-t, &v, col);
        }
        for i in k + 1..m {
            w[(i, k)] = ZERO;
        }
    }
    DenseMatrix::from_fn(k_max, n, |i, j| if i <= j { w[(i, j)] } else { ZERO })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::ONE;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_diagonal() {
        assert!((cond2(&DenseMatrix::identity(4)) - 1.0).abs() < 1e-15);
        let d = DenseMatrix::from_diagonal(&[Scalar::new(10.0, 0.0), ONE]);
        assert!((cond2(&d) - 10.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_is_infinite() {
        let z = DenseMatrix::from_columns(2, &[vec![ONE, ONE], vec![ONE, ONE]]).unwrap();
        assert_eq!(cond2(&z), f64::INFINITY);
    }

    #[test]
    fn wide_and_tall_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = DenseMatrix::from_fn(7, 3, |_, _| Scalar::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let s1 = singular_values(&a);
        let s2 = singular_values(&a.adjoint());
        assert_eq!(s1.len(), 3);
        for (x, y) in s1.iter().zip(&s2) {
            assert!((x - y).abs() < 1e-13);
        }
        let fro: f64 = s1.iter().map(|s| s * s).sum::<f64>().sqrt();
        assert!((fro - a.frobenius_norm()).abs() < 1e-13);
    }

    #[test]
    fn r_factor_preserves_gram_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = DenseMatrix::from_fn(8, 5, |_, _| Scalar::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let r = householder_r(&a);
        assert_eq!((r.rows(), r.cols()), (5, 5));
        let g1 = a.adjoint_mul(&a).unwrap();
        let g2 = r.adjoint_mul(&r).unwrap();
        assert!(g1.sub(&g2).unwrap().frobenius_norm() < 1e-13);
    }
}
