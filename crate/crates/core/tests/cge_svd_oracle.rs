use contour_deflation::cge::{cge, CgeParams};
use contour_deflation::deflation::DeflationBasis;
use contour_deflation::krylov::DenseOperator;
use contour_deflation::numcore::{DenseMatrix, Scalar};
use contour_deflation::Error;
use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn to_na(z: &DenseMatrix) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(z.rows(), z.cols(), |i, j| z[(i, j)])
}

/// `#{σ_i² / σ_1² ≥ tol}` from nalgebra's SVD.
fn svd_rank(z: &DenseMatrix, tol: f64) -> usize {
    let sv = to_na(z).singular_values();
    let s1 = sv.max();
    if s1 == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| (*s / s1).powi(2) >= tol).count()
}

fn random_block(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| Scalar::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn planted(n: usize, m: usize, rank: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    random_block(n, rank, rng).matmul(&random_block(rank, m, rng)).unwrap()
}

#[test]
fn planted_rank_six() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let z = planted(50, 10, 6, &mut rng);
    let params = CgeParams::default();
    let res = cge(&z, &params).unwrap();
    assert_eq!(res.rk, svd_rank(&z, params.tol_cge));
    // exact rank is 6; the Gram pivots past it are rounding noise
    assert_eq!(svd_rank(&z, 1e-20), 6);
    assert!(res.rk <= 6);
}

#[test]
fn gram_matrix_has_the_same_rank() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for rank in 1..6 {
        let z = planted(30, 8, rank, &mut rng);
        let gram = z.adjoint_mul(&z).unwrap();
        let sz = to_na(&z).singular_values();
        let sg = to_na(&gram).singular_values();
        let rz = sz.iter().filter(|s| **s > 1e-10 * sz.max()).count();
        let rg = sg.iter().filter(|s| **s > 1e-20_f64.sqrt() * sg.max()).count();
        assert_eq!(rz, rank);
        assert_eq!(rg, rank);
    }
}

#[test]
fn cge_rescues_a_singular_coarse_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let n = 40;
    let a = DenseMatrix::from_fn(n, n, |i, j| {
        Scalar::new(if i == j { 2.0 + i as f64 } else { 0.0 }, 0.0) + Scalar::new(0.05 * rng.gen_range(-1.0..1.0), 0.0)
    });
    let op = DenseOperator::new(a).unwrap();
    let mut z = random_block(n, 4, &mut rng);
    let dup: Vec<Scalar> = z.col(1).iter().map(|v| v * 3.0).collect();
    let cols: Vec<Vec<Scalar>> = (0..4).map(|j| z.col(j).to_vec()).chain([dup]).collect();
    z = DenseMatrix::from_columns(n, &cols).unwrap();
    assert!(matches!(DeflationBasis::build(&op, z.clone()), Err(Error::SingularCoarseMatrix { .. })));
    let res = cge(&z, &CgeParams::default()).unwrap();
    assert_eq!(res.rk, 4);
    assert!(DeflationBasis::build(&op, res.z_out).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn retained_columns_are_input_columns(seed in any::<u64>(), rank in 1usize..6, m in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = planted(25, m, rank.min(m), &mut rng);
        let res = cge(&z, &CgeParams::default()).unwrap();
        prop_assert_eq!(res.z_out.cols(), res.rk);
        let mut seen = std::collections::HashSet::new();
        for (k, &c) in res.columns.iter().enumerate() {
            prop_assert!(seen.insert(c));
            prop_assert_eq!(res.z_out.col(k), z.col(c));
        }
    }

    #[test]
    fn rank_is_permutation_invariant(seed in any::<u64>(), rank in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = 8;
        let z = planted(30, m, rank, &mut rng);
        let mut perm: Vec<usize> = (0..m).collect();
        for i in (1..m).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let zp = z.select_columns(&perm);
        let params = CgeParams::default();
        let r1 = cge(&z, &params).unwrap().rk;
        let r2 = cge(&zp, &params).unwrap().rk;
        prop_assert_eq!(r1, r2);
        let oracle = svd_rank(&z, params.tol_cge) as isize;
        prop_assert!((r1 as isize - oracle).abs() <= 1);
    }
}
