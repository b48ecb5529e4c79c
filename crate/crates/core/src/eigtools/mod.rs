//! Dense spectral diagnostics: eigenvalues, selected eigenvectors, 2-norm
//! condition numbers, interior counts and the GMRES ellipse bound.

mod dense_eig;
mod svd;

use std::io::Write;

pub use dense_eig::{balance, dense_eigenvalues, hessenberg, hessenberg_eigenvalues, DenseEigen, Eigenpairs};
pub use svd::{cond2, householder_r, singular_values};

use crate::error::{Error, Result};
use crate::numcore::{DenseMatrix, Scalar};
use crate::spectral::Contour;

/// Eigenvectors for every eigenvalue inside `contour`, unit 2-norm columns.
pub fn eigenvectors_inside(a: &DenseMatrix, contour: &Contour, seed: u64) -> Result<Eigenpairs> {
    DenseEigen::new(a)?.eigenvectors_where(|l| contour.contains(l), seed)
}

/// Eigenvalues inside `contour` (boundary within `1e-12` included).
pub fn count_inside(eigs: &[Scalar], contour: &Contour) -> usize {
    eigs.iter().filter(|&&l| contour.contains(l)).count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<Scalar>,
    pub inside_count: usize,
    pub min_distance_to_origin: f64,
}

impl SpectrumReport {
    pub fn new(eigenvalues: Vec<Scalar>, contour: &Contour) -> Self {
        let inside_count = count_inside(&eigenvalues, contour);
        let min_distance_to_origin = eigenvalues.iter().map(|l| l.norm()).fold(f64::INFINITY, f64::min);
        Self {
            eigenvalues,
            inside_count,
            min_distance_to_origin,
        }
    }

    /// One `re,im` line per eigenvalue, with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "re,im")?;
        for l in &self.eigenvalues {
            writeln!(out, "{:.16e},{:.16e}", l.re, l.im)?;
        }
        Ok(())
    }
}

/// `κ₂(V)`, the conditioning of an eigenvector basis.
pub fn eigenvector_condition(v: &DenseMatrix) -> f64 {
    cond2(v)
}

/// `κ₂(R₂₂)`, where `V = Q R` and `R₂₂` is the trailing block of `R` after
/// the first `s` columns.
pub fn trailing_block_condition(v: &DenseMatrix, s: usize) -> Result<f64> {
    let r = householder_r(v);
    if s >= r.cols() || s >= r.rows() {
        return Err(Error::InvalidArgument(format!(
            "split {s} leaves no trailing block in a {}x{} factor",
            r.rows(),
            r.cols()
        )));
    }
    let r22 = DenseMatrix::from_fn(r.rows() - s, r.cols() - s, |i, j| r[(i + s, j + s)]);
    Ok(cond2(&r22))
}

/// Ellipse `E(c, d, a)` with real center `c`, focal distance `d` and
/// semi-major axis `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub c: f64,
    pub d: f64,
    pub a: f64,
}

impl Ellipse {
    pub fn new(c: f64, d: f64, a: f64) -> Result<Self> {
        let e = Self { c, d, a };
        if a.is_nan() || a < 0.0 || d.is_nan() || d < 0.0 || !c.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid ellipse c={c}, d={d}, a={a}")));
        }
        Ok(e)
    }

    /// The bound is only meaningful when the origin lies outside: `c - a > 0`.
    pub fn excludes_origin(&self) -> bool {
        self.c - self.a > 0.0
    }
}

/// `δ = |(a + √(a² - d²)) / (c + √(c² - d²))|`, principal-branch complex roots.
///
/// GMRES residuals on a normal matrix with spectrum in the ellipse decay
/// roughly like `δʲ`.
pub fn gmres_bound_delta(e: &Ellipse) -> Result<f64> {
    let root = |x: f64| Scalar::new(x * x - e.d * e.d, 0.0).sqrt();
    let num = e.a + root(e.a);
    let den = e.c + root(e.c);
    if den.norm() == 0.0 {
        return Err(Error::InvalidArgument("c + sqrt(c^2 - d^2) vanishes".into()));
    }
    Ok((num / den).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::ZERO;

    fn r(x: f64) -> Scalar {
        Scalar::new(x, 0.0)
    }

    #[test]
    fn counting() {
        let c = Contour::new(ZERO, 0.5, 16).unwrap();
        assert_eq!(count_inside(&[r(0.1), r(1.0), r(10.0)], &c), 1);
        let rep = SpectrumReport::new(vec![r(0.1), r(-0.05), r(3.0)], &c);
        assert_eq!(rep.inside_count, 2);
        assert_eq!(rep.min_distance_to_origin, 0.05);
    }

    #[test]
    fn delta_values() {
        let touching = gmres_bound_delta(&Ellipse::new(2.0, 1.0, 2.0).unwrap()).unwrap();
        assert!((touching - 1.0).abs() < 1e-15);
        let d = gmres_bound_delta(&Ellipse::new(2.0, 1.0, 1.5).unwrap()).unwrap();
        let expected = (1.5 + 1.25f64.sqrt()) / (2.0 + 3f64.sqrt());
        assert!((d - expected).abs() < 1e-15);
        assert!((d - 0.7015).abs() < 1e-4);
        // a = 0 < d: √(-d²) = i d, |i d| / (c + √(c² - d²))
        let seg = gmres_bound_delta(&Ellipse::new(3.0, 2.0, 0.0).unwrap()).unwrap();
        assert!((seg - 2.0 / (3.0 + 5f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn csv_dump() {
        let rep = SpectrumReport::new(vec![r(1.0), Scalar::new(0.0, -2.0)], &Contour::new(ZERO, 1.0, 4).unwrap());
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "re,im");
        let parts: Vec<f64> = lines[2].split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(parts, vec![0.0, -2.0]);
    }

    #[test]
    fn trailing_block() {
        let v = DenseMatrix::from_diagonal(&[r(1.0), r(4.0), r(2.0)]);
        assert!((trailing_block_condition(&v, 1).unwrap() - 2.0).abs() < 1e-14);
        assert!(trailing_block_condition(&v, 3).is_err());
        assert!((eigenvector_condition(&v) - 4.0).abs() < 1e-14);
    }
}
