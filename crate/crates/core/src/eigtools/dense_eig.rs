//! Dense nonsymmetric eigenvalues by balancing, Householder reduction to
//! Hessenberg form and single-shift complex QR; eigenvectors by inverse
//! iteration on the Hessenberg matrix.

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numcore::{axpy, hdot_unchecked, norm2, randn_vector, scale, DenseMatrix, Scalar, ZERO};

const RADIX: f64 = 2.0;
const INVERSE_ITERATION_STEPS: usize = 8;

/// Diagonal similarity `B = D⁻¹ A D` with power-of-two entries in `D`,
/// equalizing off-diagonal row and column norms.
pub fn balance(a: &DenseMatrix) -> (DenseMatrix, Vec<f64>) {
    let n = a.rows();
    let mut b = a.clone();
    let mut d = vec![1.0; n];
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += b[(j, i)].norm();
                    r += b[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c >= g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                d[i] *= f;
                for j in 0..n {
                    b[(i, j)] /= f;
                    b[(j, i)] *= f;
                }
            }
        }
    }
    (b, d)
}

/// Householder reduction `H = Qᴴ A Q`; `Q` is accumulated when requested.
pub fn hessenberg(a: &DenseMatrix, want_q: bool) -> Result<(DenseMatrix, Option<DenseMatrix>)> {
    if !a.is_square() {
        return Err(Error::InvalidStructure(format!(
            "Hessenberg reduction needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut h = a.clone();
    let mut q = want_q.then(|| DenseMatrix::identity(n));
    if n < 3 {
        return Ok((h, q));
    }
    let mut v = vec![ZERO; n];
    for k in 0..n - 2 {
        let len = n - k - 1;
        let x = &h.col(k)[k + 1..];
        let xnorm = norm2(x);
        if xnorm == 0.0 {
            continue;
        }
        let x0 = x[0];
        let phase = if x0.norm() == 0.0 { Scalar::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        let vk = &mut v[..len];
        vk.copy_from_slice(x);
        vk[0] -= alpha;
        let vn = norm2(vk);
        if vn == 0.0 {
            continue;
        }
        for vi in vk.iter_mut() {
            *vi /= vn;
        }
        let vk = &v[..len];

        // H ← (I - 2vvᴴ) H on rows k+1.., columns k..
        for j in k..n {
            let col = &mut h.col_mut(j)[k + 1..];
            let t = hdot_unchecked(vk, col) * 2.0;
            axpy(-t, vk, col);
        }
        // H ← H (I - 2vvᴴ) on columns k+1..
        let mut w = vec![ZERO; n];
        for (l, vl) in vk.iter().enumerate() {
            axpy(*vl, h.col(k + 1 + l), &mut w);
        }
        for (l, vl) in vk.iter().enumerate() {
            axpy(-2.0 * vl.conj(), &w, h.col_mut(k + 1 + l));
        }
        if let Some(q) = q.as_mut() {
            let mut w = vec![ZERO; n];
            for (l, vl) in vk.iter().enumerate() {
                axpy(*vl, q.col(k + 1 + l), &mut w);
            }
            for (l, vl) in vk.iter().enumerate() {
                axpy(-2.0 * vl.conj(), &w, q.col_mut(k + 1 + l));
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    Ok((h, q))
}

#[derive(Debug, Clone, Copy)]
struct Givens {
    c: f64,
    s: Scalar,
}

impl Givens {
    fn zeroing(a: Scalar, b: Scalar) -> Self {
        let an = a.norm();
        if an == 0.0 {
            return Givens { c: 0.0, s: Scalar::new(1.0, 0.0) };
        }
        let t = an.hypot(b.norm());
        Givens { c: an / t, s: (a / an) * b.conj() / t }
    }
}

/// Eigenvalue of the 2×2 block `[[a, b], [c, d]]` closer to `d`.
fn wilkinson_shift(a: Scalar, b: Scalar, c: Scalar, d: Scalar) -> Scalar {
    let tr_half = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powu(2) + b * c;
    let root = disc.sqrt();
    let l1 = tr_half + root;
    let l2 = tr_half - root;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Eigenvalues of an upper Hessenberg matrix by shifted QR on the active
/// window; fails after `30 n` iterations.
pub fn hessenberg_eigenvalues(h: &DenseMatrix) -> Result<Vec<Scalar>> {
    let n = h.rows();
    let mut h = h.clone();
    let mut eig = vec![ZERO; n];
    if n == 0 {
        return Ok(eig);
    }
    let hnorm = h.frobenius_norm();
    let max_iter = 30 * n.max(1);
    let mut total = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n - 1;
    let mut rots: Vec<Givens> = Vec::with_capacity(n);

    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        // find the start of the unreduced block ending at hi
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let mut scale = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            if scale == 0.0 {
                scale = hnorm;
            }
            if sub <= f64::EPSILON * scale {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        if total >= max_iter {
            return Err(Error::NoConvergence("Hessenberg QR", max_iter));
        }
        total += 1;
        since_deflation += 1;

        let mu = if since_deflation.is_multiple_of(11) {
            h[(hi, hi)] + 0.75 * h[(hi, hi - 1)].norm()
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };

        for k in lo..=hi {
            h[(k, k)] -= mu;
        }
        rots.clear();
        for k in lo..hi {
            let g = Givens::zeroing(h[(k, k)], h[(k + 1, k)]);
            for j in k..=hi {
                let (x, y) = (h[(k, j)], h[(k + 1, j)]);
                h[(k, j)] = g.c * x + g.s * y;
                h[(k + 1, j)] = -g.s.conj() * x + g.c * y;
            }
            h[(k + 1, k)] = ZERO;
            rots.push(g);
        }
        for (idx, g) in rots.iter().enumerate() {
            let k = lo + idx;
            let top = (k + 2).min(hi);
            for i in lo..=top {
                let (x, y) = (h[(i, k)], h[(i, k + 1)]);
                h[(i, k)] = g.c * x + g.s.conj() * y;
                h[(i, k + 1)] = -g.s * x + g.c * y;
            }
        }
        for k in lo..=hi {
            h[(k, k)] += mu;
        }
    }
    Ok(eig)
}

/// Eigenvalues of a dense square matrix.
pub fn dense_eigenvalues(a: &DenseMatrix) -> Result<Vec<Scalar>> {
    a.ensure_finite("eigenvalue input")?;
    let (b, _) = balance(a);
    let (h, _) = hessenberg(&b, false)?;
    hessenberg_eigenvalues(&h)
}

/// Balanced Hessenberg form of `A` with the transformations kept, so that
/// eigenvectors can be mapped back: `A = D Q H Qᴴ D⁻¹`.
#[derive(Debug, Clone)]
pub struct DenseEigen {
    a: DenseMatrix,
    h: DenseMatrix,
    q: DenseMatrix,
    d: Vec<f64>,
    eigenvalues: Vec<Scalar>,
}

/// Selected eigenpairs with their residuals `‖A v - λ v‖`.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<Scalar>,
    /// Unit 2-norm columns.
    pub vectors: DenseMatrix,
    pub residuals: Vec<f64>,
}

impl DenseEigen {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        a.ensure_finite("eigenvalue input")?;
        let (b, d) = balance(a);
        let (h, q) = hessenberg(&b, true)?;
        let eigenvalues = hessenberg_eigenvalues(&h)?;
        Ok(Self {
            a: a.clone(),
            h,
            q: q.expect("requested"),
            d,
            eigenvalues,
        })
    }

    pub fn eigenvalues(&self) -> &[Scalar] {
        &self.eigenvalues
    }

    pub fn hessenberg(&self) -> &DenseMatrix {
        &self.h
    }

    /// Inverse iteration for every eigenvalue accepted by `select`.
    ///
    /// Eigenvalues closer than `1e-8 ‖H‖` to an earlier one share a cluster:
    /// their shifts are nudged apart and each iterate is orthogonalized
    /// against the cluster's earlier vectors, so repeated eigenvalues yield
    /// independent vectors.
    pub fn eigenvectors_where(&self, select: impl Fn(Scalar) -> bool, seed: u64) -> Result<Eigenpairs> {
        let n = self.h.rows();
        let hnorm = self.h.frobenius_norm().max(f64::MIN_POSITIVE);
        let cluster_tol = 1e-8 * hnorm;
        let nudge = (n as f64) * f64::EPSILON * hnorm;
        let target = 1e-12 * hnorm;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut chosen: Vec<Scalar> = self.eigenvalues.iter().copied().filter(|&l| select(l)).collect();
        chosen.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.re.total_cmp(&b.re)).then(a.im.total_cmp(&b.im)));

        let mut ys: Vec<Vec<Scalar>> = Vec::with_capacity(chosen.len());
        for (idx, &lambda) in chosen.iter().enumerate() {
            let peers: Vec<usize> = (0..idx).filter(|&j| (chosen[j] - lambda).norm() <= cluster_tol).collect();
            let mu = lambda + nudge * (1 + peers.len()) as f64;
            let lu = HessenbergLu::new(&self.h, mu, nudge);

            let mut y = randn_vector(&mut rng, n);
            let mut best = (f64::INFINITY, y.clone());
            for _ in 0..INVERSE_ITERATION_STEPS {
                lu.solve_in_place(&mut y);
                for &p in &peers {
                    let c = hdot_unchecked(&ys[p], &y);
                    axpy(-c, &ys[p], &mut y);
                }
                let yn = norm2(&y);
                if yn == 0.0 || !yn.is_finite() {
                    break;
                }
                scale(Scalar::new(1.0 / yn, 0.0), &mut y);
                let res = hessenberg_residual(&self.h, lambda, &y);
                if res < best.0 {
                    best = (res, y.clone());
                }
                if res <= target {
                    break;
                }
            }
            if best.0 > target {
                warn!("inverse iteration for eigenvalue {lambda} stalled at residual {:.2e}", best.0);
            }
            ys.push(best.1);
        }

        let mut vectors = DenseMatrix::zeros(n, chosen.len());
        let mut residuals = Vec::with_capacity(chosen.len());
        for (j, y) in ys.iter().enumerate() {
            let col = vectors.col_mut(j);
            for (l, yl) in y.iter().enumerate() {
                axpy(*yl, self.q.col(l), col);
            }
            for (ci, di) in col.iter_mut().zip(&self.d) {
                *ci *= *di;
            }
            let cn = norm2(col);
            scale(Scalar::new(1.0 / cn, 0.0), col);
            let v = vectors.col(j);
            let mut r = self.a.matvec(v)?;
            axpy(-chosen[j], v, &mut r);
            residuals.push(norm2(&r));
        }
        Ok(Eigenpairs {
            values: chosen,
            vectors,
            residuals,
        })
    }
}

/// `‖H y - λ y‖` for upper Hessenberg `H`.
fn hessenberg_residual(h: &DenseMatrix, lambda: Scalar, y: &[Scalar]) -> f64 {
    let n = h.rows();
    let mut r: Vec<Scalar> = y.iter().map(|v| -lambda * v).collect();
    for (j, yj) in y.iter().enumerate() {
        let col = h.col(j);
        let end = (j + 2).min(n);
        for i in 0..end {
            r[i] += col[i] * yj;
        }
    }
    norm2(&r)
}

/// LU with partial pivoting of `H - μ I` for upper Hessenberg `H`; only
/// adjacent rows are ever exchanged.
struct HessenbergLu {
    u: DenseMatrix,
    swaps: Vec<bool>,
    multipliers: Vec<Scalar>,
}

impl HessenbergLu {
    fn new(h: &DenseMatrix, mu: Scalar, pivot_floor: f64) -> Self {
        let n = h.rows();
        let mut u = h.clone();
        for k in 0..n {
            u[(k, k)] -= mu;
        }
        let mut swaps = vec![false; n.saturating_sub(1)];
        let mut multipliers = vec![ZERO; n.saturating_sub(1)];
        for k in 0..n.saturating_sub(1) {
            if u[(k + 1, k)].norm() > u[(k, k)].norm() {
                swaps[k] = true;
                for j in k..n {
                    let t = u[(k, j)];
                    u[(k, j)] = u[(k + 1, j)];
                    u[(k + 1, j)] = t;
                }
            }
            if u[(k, k)].norm() == 0.0 {
                u[(k, k)] = Scalar::new(pivot_floor, 0.0);
            }
            let l = u[(k + 1, k)] / u[(k, k)];
            multipliers[k] = l;
            u[(k + 1, k)] = ZERO;
            for j in k + 1..n {
                let t = l * u[(k, j)];
                u[(k + 1, j)] -= t;
            }
        }
        if n > 0 && u[(n - 1, n - 1)].norm() == 0.0 {
            u[(n - 1, n - 1)] = Scalar::new(pivot_floor, 0.0);
        }
        Self { u, swaps, multipliers }
    }

    fn solve_in_place(&self, x: &mut [Scalar]) {
        let n = x.len();
        for k in 0..n.saturating_sub(1) {
            if self.swaps[k] {
                x.swap(k, k + 1);
            }
            let t = self.multipliers[k] * x[k];
            x[k + 1] -= t;
        }
        for j in (0..n).rev() {
            x[j] /= self.u[(j, j)];
            let xj = x[j];
            let col = self.u.col(j);
            for i in 0..j {
                x[i] -= col[i] * xj;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::ONE;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Scalar {
        Scalar::new(re, im)
    }

    fn sorted(mut v: Vec<Scalar>) -> Vec<Scalar> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    fn random_dense(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn triangular_input() {
        let a = DenseMatrix::from_diagonal(&[ONE, c(2.0, 1.0)]);
        let e = sorted(dense_eigenvalues(&a).unwrap());
        assert!((e[0] - ONE).norm() < 1e-14);
        assert!((e[1] - c(2.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn rotation_matrix() {
        let a = DenseMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => ONE,
            (1, 0) => -ONE,
            _ => ZERO,
        });
        let e = sorted(dense_eigenvalues(&a).unwrap());
        assert!((e[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((e[1] - c(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn companion_matrix_roots() {
        // z² - 3z + 2
        let a = DenseMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c(3.0, 0.0),
            (0, 1) => c(-2.0, 0.0),
            (1, 0) => ONE,
            _ => ZERO,
        });
        let e = sorted(dense_eigenvalues(&a).unwrap());
        assert!((e[0] - ONE).norm() < 1e-13);
        assert!((e[1] - c(2.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn hessenberg_is_a_unitary_similarity() {
        let a = random_dense(9, 1);
        let (h, q) = hessenberg(&a, true).unwrap();
        let q = q.unwrap();
        for j in 0..9 {
            for i in j + 2..9 {
                assert_eq!(h[(i, j)], ZERO);
            }
        }
        let back = q.matmul(&h).unwrap().matmul(&q.adjoint()).unwrap();
        assert!(back.sub(&a).unwrap().frobenius_norm() < 1e-13 * a.frobenius_norm());
        let qq = q.adjoint_mul(&q).unwrap();
        assert!(qq.sub(&DenseMatrix::identity(9)).unwrap().frobenius_norm() < 1e-13);
    }

    #[test]
    fn balancing_is_a_similarity() {
        let mut a = random_dense(6, 2);
        a[(0, 5)] *= 1e6;
        a[(5, 0)] *= 1e-6;
        let (b, d) = balance(&a);
        for i in 0..6 {
            for j in 0..6 {
                assert!((b[(i, j)] - a[(i, j)] * d[j] / d[i]).norm() <= 1e-15 * a[(i, j)].norm());
            }
        }
        assert!(d.iter().all(|x| x.log2().fract() == 0.0));
    }

    #[test]
    fn trace_and_determinant_agree() {
        for seed in 0..5 {
            let n = 25;
            let a = random_dense(n, 10 + seed);
            let e = dense_eigenvalues(&a).unwrap();
            let tr: Scalar = (0..n).map(|i| a[(i, i)]).sum();
            let se: Scalar = e.iter().sum();
            assert!((tr - se).norm() <= 1e-9 * a.frobenius_norm() * n as f64);
        }
    }

    #[test]
    fn eigenvector_residuals_and_repeated_eigenvalues() {
        // symmetric matrix with a triple eigenvalue
        let n = 12;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let raw = DenseMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), 0.0));
        let (_, q) = hessenberg(&raw.matmul(&raw.adjoint()).unwrap(), true).unwrap();
        let q = q.unwrap();
        let lam: Vec<Scalar> = (0..n).map(|i| c(if i < 3 { 0.5 } else { 2.0 + i as f64 }, 0.0)).collect();
        let a = q.matmul(&DenseMatrix::from_diagonal(&lam)).unwrap().matmul(&q.adjoint()).unwrap();
        let eig = DenseEigen::new(&a).unwrap();
        let pairs = eig.eigenvectors_where(|l| l.norm() < 1.0, 7).unwrap();
        assert_eq!(pairs.values.len(), 3);
        let anorm = a.frobenius_norm();
        for j in 0..3 {
            let v = pairs.vectors.col(j);
            let av = a.matvec(v).unwrap();
            let r: Vec<Scalar> = av.iter().zip(v).map(|(x, y)| x - pairs.values[j] * y).collect();
            assert!(norm2(&r) <= 1e-10 * anorm);
        }
        let gram = pairs.vectors.adjoint_mul(&pairs.vectors).unwrap();
        let sv = crate::eigtools::singular_values(&gram);
        assert!(sv.iter().cloned().fold(f64::INFINITY, f64::min) > 0.5);
    }

    #[test]
    fn single_interior_vector() {
        let a = DenseMatrix::from_diagonal(&[c(0.1, 0.0), c(5.0, 0.0)]);
        let pairs = DenseEigen::new(&a).unwrap().eigenvectors_where(|l| l.norm() < 1.0, 1).unwrap();
        assert_eq!(pairs.vectors.cols(), 1);
        let v = pairs.vectors.col(0);
        assert!((v[0].norm() - 1.0).abs() < 1e-12);
        assert!(v[1].norm() < 1e-12);
    }
}
