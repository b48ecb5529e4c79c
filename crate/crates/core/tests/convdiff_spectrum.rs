use contour_deflation::eigtools::{count_inside, dense_eigenvalues, eigenvectors_inside};
use contour_deflation::numcore::{axpy, norm2, Scalar};
use contour_deflation::problems::{convdiff_assemble, ConvDiffSpec};
use contour_deflation::spectral::Contour;

// Five eigenvalues of smallest modulus at n = 31, Re = 8000, from LAPACK
// (numpy.linalg.eigvals on the same stencil assembled independently).
const REFERENCE: [f64; 5] = [
    3.804313215531766e-02,
    1.998571785235742e-01,
    4.812458961737246e-01,
    8.648475107062602e-01,
    1.31768260437568e+00,
];

#[test]
fn reduced_mesh_small_eigenvalues_match_reference() {
    let spec = ConvDiffSpec::new(31, 8000.0);
    let a = convdiff_assemble(&spec).unwrap().to_dense();
    let mut eig = dense_eigenvalues(&a).unwrap();
    assert_eq!(eig.len(), 961);

    let trace: Scalar = (0..961).map(|i| a[(i, i)]).sum();
    let sum: Scalar = eig.iter().sum();
    assert!((trace - sum).norm() <= 1e-9 * a.frobenius_norm() * 961.0);

    eig.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
    for (l, r) in eig.iter().zip(REFERENCE) {
        assert!((l - Scalar::new(r, 0.0)).norm() <= 1e-8 * r.max(1.0), "{l} vs {r}");
    }

    let contour = Contour::new(Scalar::new(0.0, 0.0), 0.67, 16).unwrap();
    assert_eq!(count_inside(&eig, &contour), 3);

    let pairs = eigenvectors_inside(&a, &contour, 1).unwrap();
    assert_eq!(pairs.vectors.cols(), 3);
    let anorm = a.frobenius_norm();
    for j in 0..3 {
        let v = pairs.vectors.col(j);
        let mut r = a.matvec(v).unwrap();
        axpy(-pairs.values[j], v, &mut r);
        assert!(norm2(&r) <= 1e-10 * anorm);
        assert!((pairs.residuals[j] - norm2(&r)).abs() <= 1e-14 * anorm);
    }
}
