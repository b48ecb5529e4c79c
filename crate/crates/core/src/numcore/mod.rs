//! Complex vector kernels plus the dense and sparse matrix types shared by
//! every solver in the crate.
//!
//! Everything is complex double precision. Real inputs are promoted on load so
//! the complex-shifted resolvent systems run through the same code path as the
//! original operator.

mod dense;
mod lu;
mod sparse;

pub use dense::DenseMatrix;
pub use lu::LuFactors;
pub use sparse::SparseMatrix;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type Scalar = Complex64;

pub const ZERO: Scalar = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Scalar = Complex64 { re: 1.0, im: 0.0 };

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        });
    }
    Ok(())
}

/// Conjugated inner product `x^H y`.
pub fn hdot(x: &[Scalar], y: &[Scalar]) -> Result<Scalar> {
    check_len("hdot", x.len(), y.len())?;
    Ok(hdot_unchecked(x, y))
}

#[inline]
pub(crate) fn hdot_unchecked(x: &[Scalar], y: &[Scalar]) -> Scalar {
    debug_assert_eq!(x.len(), y.len());
    let mut re = 0.0;
    let mut im = 0.0;
    for (a, b) in x.iter().zip(y) {
        // conj(a) * b
        re += a.re * b.re + a.im * b.im;
        im += a.re * b.im - a.im * b.re;
    }
    Scalar::new(re, im)
}

/// Euclidean norm, scaled to avoid overflow/underflow in the sum of squares.
pub fn norm2(x: &[Scalar]) -> f64 {
    let mut scale = 0.0_f64;
    let mut ssq = 1.0_f64;
    for z in x {
        for part in [z.re, z.im] {
            if part != 0.0 {
                let a = part.abs();
                if scale < a {
                    ssq = 1.0 + ssq * (scale / a) * (scale / a);
                    scale = a;
                } else {
                    ssq += (a / scale) * (a / scale);
                }
            }
        }
    }
    scale * ssq.sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: Scalar, x: &[Scalar], y: &mut [Scalar]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: Scalar, x: &mut [Scalar]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// `x - y`
pub fn sub(x: &[Scalar], y: &[Scalar]) -> Vec<Scalar> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn all_finite(x: &[Scalar]) -> bool {
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Standard-normal real vector promoted to complex, as used for random probe
/// blocks and random initial guesses.
pub fn randn_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Scalar> {
    (0..n)
        .map(|_| Scalar::new(rng.sample(StandardNormal), 0.0))
        .collect()
}

/// Relative distance `‖x - y‖ / ‖y‖` (absolute when `y` is zero).
pub fn rel_diff(x: &[Scalar], y: &[Scalar]) -> f64 {
    let diff = norm2(&sub(x, y));
    let ny = norm2(y);
    if ny == 0.0 {
        diff
    } else {
        diff / ny
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Scalar {
        Scalar::new(re, im)
    }

    #[test]
    fn hdot_examples() {
        let i = c(0.0, 1.0);
        assert_eq!(hdot(&[i, ZERO], &[i, ZERO]).unwrap(), ONE);
        assert_eq!(hdot(&[ONE, ZERO], &[ZERO, ONE]).unwrap(), ZERO);
        assert_eq!(
            hdot(&[c(1.0, 1.0), c(2.0, 0.0)], &[ONE, ONE]).unwrap(),
            c(3.0, -1.0)
        );
    }

    #[test]
    fn hdot_rejects_mismatch() {
        assert!(matches!(
            hdot(&[ONE], &[ONE, ONE]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn norm2_survives_extreme_scales() {
        let x = [c(1e200, 0.0), c(0.0, 1e200)];
        assert!((norm2(&x) / (1e200 * 2f64.sqrt()) - 1.0).abs() < 1e-15);
        let y = [c(3e-200, 4e-200)];
        assert!((norm2(&y) / 5e-200 - 1.0).abs() < 1e-15);
        assert_eq!(norm2(&[]), 0.0);
    }

    fn cvec(len: usize) -> impl Strategy<Value = Vec<Scalar>> {
        prop::collection::vec(
            (-1e3..1e3f64, -1e3..1e3f64).prop_map(|(a, b)| c(a, b)),
            len,
        )
    }

    proptest! {
        #[test]
        fn hdot_is_conjugate_symmetric((x, y) in (1usize..40).prop_flat_map(|n| (cvec(n), cvec(n)))) {
            let xy = hdot(&x, &y).unwrap();
            let yx = hdot(&y, &x).unwrap();
            prop_assert_eq!(xy, yx.conj());
        }

        #[test]
        fn norm_is_absolutely_homogeneous(x in cvec(17), re in -50.0..50.0f64, im in -50.0..50.0f64) {
            let alpha = c(re, im);
            let mut ax = x.clone();
            scale(alpha, &mut ax);
            let lhs = norm2(&ax);
            let rhs = alpha.norm() * norm2(&x);
            prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * rhs);
        }

        #[test]
        fn norm_matches_hdot(x in cvec(23)) {
            let n = norm2(&x);
            let h = hdot(&x, &x).unwrap().re.sqrt();
            prop_assert!((n - h).abs() <= 1e-13 * n.max(1e-300));
        }
    }
}
