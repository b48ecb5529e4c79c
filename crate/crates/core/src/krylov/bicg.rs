use super::{prepare, true_relres, LinearOperator, SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::numcore::{all_finite, axpy, hdot_unchecked, Scalar, ZERO};

const BREAKDOWN: f64 = 1e-300;

/// BiCG that keeps the best iterate.
///
/// Runs the standard BiCG recurrence with shadow residual `r̃_0 = r_0`. The
/// true relative residual of every iterate is recorded; the returned `x` is
/// either the first iterate below `tol` or the one with the smallest residual
/// over the whole run.
pub fn mbicg<O: LinearOperator + ?Sized>(
    op: &O,
    b: &[Scalar],
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    if !op.has_adjoint() {
        return Err(Error::AdjointUnavailable);
    }
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

    let relres0 = true_relres(op, b, &x, bnorm, &mut work);
    if !relres0.is_finite() {
        return Err(Error::NonFinite("mbicg initial residual"));
    }
    let mut best_x = x.clone();
    let mut best = relres0;
    let mut history = Vec::new();
    if relres0 < cfg.tol {
        return Ok(SolveReport {
            x,
            iterations: 0,
            relres_history: history,
            converged: true,
            best_relres: relres0,
            true_relres: relres0,
            residual_gap: false,
            breakdown: false,
        });
    }

    let mut r = work.clone();
    let mut r_shadow = r.clone();
    let mut p = r.clone();
    let mut p_shadow = r_shadow.clone();
    let mut q = vec![ZERO; n];
    let mut q_shadow = vec![ZERO; n];
    let mut rho = hdot_unchecked(&r_shadow, &r);
    let mut breakdown = false;
    let mut iterations = 0;

    while iterations < cfg.maxit {
        if rho.norm() < BREAKDOWN {
            breakdown = true;
            break;
        }
        op.apply(&p, &mut q);
        op.apply_adjoint(&p_shadow, &mut q_shadow)?;
        if !all_finite(&q) || !all_finite(&q_shadow) {
            return Err(Error::NonFinite("mbicg operator output"));
        }
        let sigma = hdot_unchecked(&p_shadow, &q);
        if sigma.norm() < BREAKDOWN {
            breakdown = true;
            break;
        }
        let alpha = rho / sigma;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        axpy(-alpha.conj(), &q_shadow, &mut r_shadow);
        iterations += 1;

        let last = true_relres(op, b, &x, bnorm, &mut work);
        if !last.is_finite() {
            return Err(Error::NonFinite("mbicg iterate"));
        }
        history.push(last);
        if last < best {
            best = last;
            best_x.copy_from_slice(&x);
        }
        if last < cfg.tol {
            break;
        }

        let rho_next = hdot_unchecked(&r_shadow, &r);
        let beta = rho_next / rho;
        rho = rho_next;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        let beta_c = beta.conj();
        for (pi, ri) in p_shadow.iter_mut().zip(&r_shadow) {
            *pi = ri + beta_c * *pi;
        }
    }

    Ok(SolveReport {
        x: best_x,
        iterations,
        relres_history: history,
        converged: best < cfg.tol,
        best_relres: best,
        true_relres: best,
        residual_gap: false,
        breakdown,
    })
}
