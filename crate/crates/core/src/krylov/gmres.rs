use log::{debug, info};

use super::{prepare, true_relres, LinearOperator, SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::numcore::{all_finite, axpy, hdot_unchecked, norm2, Scalar, ZERO};

/// Complex Givens rotation `[c s; -conj(s) c]` with real `c`.
#[derive(Debug, Clone, Copy)]
struct Givens {
    c: f64,
    s: Scalar,
}

impl Givens {
    /// Rotation that zeroes `b` against `a`.
    fn zeroing(a: Scalar, b: Scalar) -> Self {
        let an = a.norm();
        if an == 0.0 {
            return Givens {
                c: 0.0,
                s: Scalar::new(1.0, 0.0),
            };
        }
        let t = an.hypot(b.norm());
        Givens {
            c: an / t,
            s: (a / an) * b.conj() / t,
        }
    }

    #[inline]
    fn apply(&self, x: &mut Scalar, y: &mut Scalar) {
        let (x0, y0) = (*x, *y);
        *x = self.c * x0 + self.s * y0;
        *y = -self.s.conj() * x0 + self.c * y0;
    }
}

/// GMRES with modified Gram–Schmidt Arnoldi and Givens least squares.
///
/// Runs unrestarted unless `cfg.restart` is set. Each Arnoldi step counts as
/// one iteration and contributes the Givens residual estimate to the history.
/// On exit the iterate is checked against one true residual evaluation.
pub fn gmres<O: LinearOperator + ?Sized>(
    op: &O,
    b: &[Scalar],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let (mut x, bnorm) = prepare(op, b, cfg)?;
    let n = op.dim();
    let mut work = vec![ZERO; n];

    if bnorm == 0.0 {
        return Ok(SolveReport {
            x: vec![ZERO; n],
            iterations: 0,
            relres_history: Vec::new(),
            converged: true,
            best_relres: 0.0,
            true_relres: 0.0,
            residual_gap: false,
            breakdown: false,
        });
    }

    let cycle_len = cfg.restart.unwrap_or(cfg.maxit).min(cfg.maxit);
    info!(
        "gmres: n = {n}, maxit = {}, restart = {:?}, Krylov basis {:.1} MiB",
        cfg.maxit,
        cfg.restart,
        cfg.gmres_basis_bytes(n) as f64 / (1024.0 * 1024.0)
    );

    let mut history: Vec<f64> = Vec::new();
    let mut iterations = 0usize;
    let mut relres = true_relres(op, b, &x, bnorm, &mut work);
    if !relres.is_finite() {
        return Err(Error::NonFinite("gmres initial residual"));
    }
    let mut best = relres;
    let mut gap = false;

    while relres >= cfg.tol && iterations < cfg.maxit {
        // r = b - A x is left in `work` by true_relres
        let beta = norm2(&work);
        let steps = cycle_len.min(cfg.maxit - iterations);
        let mut basis: Vec<Vec<Scalar>> = Vec::with_capacity(steps + 1);
        basis.push(work.iter().map(|r| r / beta).collect());
        let mut hess: Vec<Vec<Scalar>> = Vec::with_capacity(steps);
        let mut rotations: Vec<Givens> = Vec::with_capacity(steps);
        let mut g = vec![ZERO; steps + 1];
        g[0] = Scalar::new(beta, 0.0);
        let mut estimate = relres;

        for j in 0..steps {
            let mut w = vec![ZERO; n];
            op.apply(&basis[j], &mut w);
            if !all_finite(&w) {
                return Err(Error::NonFinite("gmres operator output"));
            }
            let wnorm = norm2(&w);
            let mut h = vec![ZERO; j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = hdot_unchecked(v, &w);
                axpy(-hij, v, &mut w);
                h[i] = hij;
            }
            let sub = norm2(&w);
            h[j + 1] = Scalar::new(sub, 0.0);
            for (i, rot) in rotations.iter().enumerate() {
                let (top, bottom) = h.split_at_mut(i + 1);
                rot.apply(&mut top[i], &mut bottom[0]);
            }
            let rot = Givens::zeroing(h[j], h[j + 1]);
            {
                let (top, bottom) = h.split_at_mut(j + 1);
                rot.apply(&mut top[j], &mut bottom[0]);
            }
            let (gj, gj1) = (g[j], g[j + 1]);
            let (mut a, mut c) = (gj, gj1);
            rot.apply(&mut a, &mut c);
            g[j] = a;
            g[j + 1] = c;
            rotations.push(rot);
            hess.push(h);

            iterations += 1;
            estimate = g[j + 1].norm() / bnorm;
            history.push(estimate);
            best = best.min(estimate);

            let happy = sub <= 1e-14 * wnorm.max(f64::MIN_POSITIVE);
            if happy {
                debug!("gmres: happy breakdown at iteration {iterations}");
            }
            if estimate < cfg.tol || happy || j + 1 == steps {
                break;
            }
            basis.push(w.iter().map(|wi| wi / sub).collect());
        }

        // back substitution on the rotated Hessenberg triangle
        let k = hess.len();
        let mut y = g[..k].to_vec();
        for i in (0..k).rev() {
            for l in i + 1..k {
                let t = hess[l][i] * y[l];
                y[i] -= t;
            }
            y[i] /= hess[i][i];
        }
        for (yi, v) in y.iter().zip(&basis) {
            axpy(*yi, v, &mut x);
        }
        if !all_finite(&x) {
            return Err(Error::NonFinite("gmres iterate"));
        }

        relres = true_relres(op, b, &x, bnorm, &mut work);
        if estimate < cfg.tol && relres >= cfg.tol {
            gap = (relres - estimate) > 10.0 * cfg.tol;
            if gap {
                debug!("gmres: estimate {estimate:.3e} vs true residual {relres:.3e}");
            }
            if cfg.restart.is_none() {
                // unrestarted runs stop on the estimate
                break;
            }
        } else if estimate < cfg.tol {
            break;
        }
    }

    let converged = best < cfg.tol;
    Ok(SolveReport {
        x,
        iterations,
        relres_history: history,
        converged,
        best_relres: best,
        true_relres: relres,
        residual_gap: gap,
        breakdown: false,
    })
}
