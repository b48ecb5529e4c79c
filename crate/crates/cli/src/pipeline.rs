//! The eight computations as one staged pipeline.
//!
//! Configuration and I/O problems are errors. Numerical trouble inside a stage
//! (singular coarse matrix, eigen-decomposition over budget, no surviving
//! columns) is recorded in the report and ends the run early.

use std::time::Instant;

use anyhow::{bail, Context, Result};
use contour_deflation::cge::{cge, CgeParams};
use contour_deflation::deflation::{deflated_solve, DeflationBasis};
use contour_deflation::eigtools::{cond2, DenseEigen};
use contour_deflation::krylov::{CsrOperator, KrylovMethod, LinearOperator, SolveReport, SolverConfig};
use contour_deflation::mmio::read_matrix_market;
use contour_deflation::numcore::{norm2, DenseMatrix, Scalar, ONE, ZERO};
use contour_deflation::precond::{ilu0_factor, ilu0_operator, Ilu0Factors};
use contour_deflation::problems::{convdiff_assemble, rhs_ones};
use contour_deflation::spectral::{compute_z, random_probe_block, Contour, ShiftedGuess, SubspaceJob};
use contour_deflation::SparseMatrix;
use log::info;

use crate::config::{ExperimentConfig, InnerInit, ProblemConfig};
use crate::report::{ExperimentReport, Metric, Sentinel, StageReport};

/// The assembled or loaded matrix with its provenance metrics.
pub struct LoadedProblem {
    pub a: SparseMatrix,
    pub stage: StageReport,
}

pub fn load_problem(problem: &ProblemConfig) -> Result<LoadedProblem> {
    let t = Instant::now();
    let mut stage = StageReport::new("problem");
    let a = match problem {
        ProblemConfig::Convdiff { n, re, form } => {
            stage.set("kind", Metric::Text("convdiff".into()));
            stage.set("grid", Metric::count(*n));
            stage.set("re", Metric::real(*re));
            let spec = contour_deflation::problems::ConvDiffSpec::new(*n, *re).with_form(*form);
            convdiff_assemble(&spec)?
        }
        ProblemConfig::Mmfile { path } | ProblemConfig::MmfileIlu0 { path } => {
            let read = read_matrix_market(path).with_context(|| format!("reading {}", path.display()))?;
            stage.set("kind", Metric::Text("mmfile".into()));
            stage.set("path", Metric::Text(path.display().to_string()));
            stage.set("stored_entries", Metric::count(read.stored_entries));
            stage.set("duplicates", Metric::count(read.duplicates));
            read.matrix.into_sparse()
        }
    };
    if !a.is_square() {
        bail!("matrix must be square, got {}x{}", a.n_rows(), a.n_cols());
    }
    stage.set("n", Metric::count(a.n_rows()));
    stage.set("nnz", Metric::count(a.nnz()));
    stage.seconds = t.elapsed().as_secs_f64();
    Ok(LoadedProblem { a, stage })
}

fn relerr_to_ones(x: &[Scalar]) -> f64 {
    let diff: Vec<Scalar> = x.iter().map(|v| v - ONE).collect();
    norm2(&diff) / (x.len() as f64).sqrt()
}

/// `relerr` is the diverged sentinel unless the solve converged to a finite
/// iterate; `relerr_final` always holds the attained error.
fn record_relerr(stage: &mut StageReport, relerr: f64, converged: bool) {
    let m = if converged && relerr.is_finite() {
        Metric::Value(relerr)
    } else {
        Metric::Sentinel(Sentinel::Diverged)
    };
    stage.set("relerr", m);
    stage.set("relerr_final", Metric::real(relerr));
}

fn record_solve(stage: &mut StageReport, rep: &SolveReport, method: KrylovMethod, maxit: usize) {
    stage.set("solver", Metric::Text(method.name().into()));
    stage.set("maxit", Metric::count(maxit));
    stage.set("iterations", Metric::count(rep.iterations));
    stage.set("converged", Metric::Flag(rep.converged));
    stage.set(
        "status",
        Metric::Text(if rep.converged { "converged" } else { "diverged" }.into()),
    );
    stage.set("breakdown", Metric::Flag(rep.breakdown));
    stage.set("residual_gap", Metric::Flag(rep.residual_gap));
}

/// Dense copy of an operator, one application per column.
fn operator_to_dense<O: LinearOperator>(op: &O) -> DenseMatrix {
    let n = op.dim();
    let mut out = DenseMatrix::zeros(n, n);
    let mut e = vec![ZERO; n];
    for j in 0..n {
        e[j] = ONE;
        op.apply(&e, out.col_mut(j));
        e[j] = ZERO;
    }
    out
}

struct Context_<'a> {
    cfg: &'a ExperimentConfig,
    /// Unpreconditioned matrix and right-hand side, for the original residual.
    a: &'a SparseMatrix,
    b: &'a [Scalar],
    ilu: Option<&'a Ilu0Factors>,
}

impl Context_<'_> {
    fn back_map(&self, x: &[Scalar]) -> Result<Vec<Scalar>> {
        Ok(match self.ilu {
            Some(f) => f.back_map(x)?,
            None => x.to_vec(),
        })
    }

    fn finish_solution(&self, stage: &mut StageReport, x_op: &[Scalar], converged: bool) -> Result<()> {
        let x = self.back_map(x_op)?;
        record_relerr(stage, relerr_to_ones(&x), converged);
        if self.ilu.is_some() {
            let ax = self.a.spmv(&x)?;
            let r: Vec<Scalar> = self.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            stage.set("relres_original", Metric::real(norm2(&r) / norm2(self.b)));
        }
        Ok(())
    }
}

fn timed<T>(stage: &mut StageReport, f: impl FnOnce(&mut StageReport) -> Result<T>) -> Option<T> {
    let t = Instant::now();
    let out = f(stage);
    stage.seconds = t.elapsed().as_secs_f64();
    match out {
        Ok(v) => Some(v),
        Err(e) => {
            stage.ok = false;
            stage.error = Some(format!("{e:#}"));
            None
        }
    }
}

/// How much of the pipeline to run after the problem is set up.
pub enum Mode {
    /// The configured computation end to end.
    Full,
    /// Undeflated solve regardless of the computation id.
    Plain,
    /// Stop once the deflation subspace (after optional CGE) is built.
    SubspaceOnly,
    /// Deflated solve with a caller-supplied basis.
    GivenBasis(DenseMatrix),
}

fn run_on_operator<O: LinearOperator>(
    ctx: &Context_<'_>,
    op: &O,
    b_op: &[Scalar],
    mode: Mode,
    stages: &mut Vec<StageReport>,
) -> Result<Option<DenseMatrix>> {
    let cfg = ctx.cfg;
    let n = op.dim();
    let outer: KrylovMethod = cfg.outer.solver.into();
    let maxit = cfg.outer_maxit(n);
    let mut outer_cfg = SolverConfig::new(cfg.outer.tol, maxit);
    outer_cfg.restart = cfg.outer.restart;

    let plain = matches!(mode, Mode::Plain) || (matches!(mode, Mode::Full) && cfg.computation == 1);
    if matches!(mode, Mode::SubspaceOnly) && cfg.computation == 1 {
        bail!("computation #1 builds no deflation subspace");
    }
    if plain {
        let mut stage = StageReport::new("solve");
        timed(&mut stage, |st| {
            let rep = outer.solve(op, b_op, &outer_cfg)?;
            record_solve(st, &rep, outer, maxit);
            st.set("relres", Metric::real(rep.true_relres));
            st.set("best_relres", Metric::real(rep.best_relres));
            ctx.finish_solution(st, &rep.x, rep.converged)
        });
        stages.push(stage);
        return Ok(None);
    }

    let only_subspace = matches!(mode, Mode::SubspaceOnly);
    let contour = Contour::new(cfg.contour.center(), cfg.contour.r, cfg.contour.q)?;
    let z = if let Mode::GivenBasis(z) = mode {
        if z.rows() != n || z.cols() == 0 {
            bail!("basis is {}x{}, expected {n} rows and at least one column", z.rows(), z.cols());
        }
        z
    } else if cfg.computation == 2 {
        let mut stage = StageReport::new("eigenvectors");
        let z = timed(&mut stage, |st| {
            if n > cfg.eig_limit {
                bail!("N = {n} exceeds eig-limit {}; exact eigenvectors not computed", cfg.eig_limit);
            }
            let dense = operator_to_dense(op);
            let eig = DenseEigen::new(&dense)?;
            let min_abs = eig.eigenvalues().iter().map(|l| l.norm()).fold(f64::INFINITY, f64::min);
            st.set("min_abs_eigenvalue", Metric::real(min_abs));
            let pairs = eig.eigenvectors_where(|l| contour.contains(l), cfg.seed)?;
            st.set("inside_count", Metric::count(pairs.values.len()));
            let worst = pairs.residuals.iter().cloned().fold(0.0, f64::max);
            st.set("max_eigvec_residual", Metric::real(worst));
            if pairs.values.is_empty() {
                bail!("no eigenvalues inside the contour");
            }
            Ok(pairs.vectors)
        });
        stages.push(stage);
        match z {
            Some(z) => z,
            None => return Ok(None),
        }
    } else {
        let mut stage = StageReport::new("subspace");
        let z = timed(&mut stage, |st| {
            let y = random_probe_block(n, cfg.m, cfg.seed);
            let mut job = SubspaceJob::new(y, contour, cfg.inner.solver.into());
            job.inner_cfg = SolverConfig::new(cfg.inner.tol, cfg.inner.maxit);
            job.initial_guess = match cfg.inner.init {
                InnerInit::Zero => ShiftedGuess::Zero,
                InnerInit::Random => ShiftedGuess::Random {
                    seed: cfg.seed.wrapping_add(1),
                },
            };
            job.threads = cfg.threads;
            let res = compute_z(op, &job)?;
            st.set("m", Metric::count(cfg.m));
            st.set("q", Metric::count(cfg.contour.q));
            st.set("inner_solver", Metric::Text(job.inner_solver.name().into()));
            st.set("relres_min", Metric::real(res.stats.min_relres));
            st.set("relres_max", Metric::real(res.stats.max_relres));
            st.set("inner_iterations", Metric::count(res.stats.total_iterations()));
            st.set("unconverged", Metric::count(res.stats.unconverged()));
            st.set("breakdowns", Metric::count(res.stats.breakdowns()));
            Ok(res.z)
        });
        stages.push(stage);
        let Some(mut z) = z else { return Ok(None) };

        if cfg.cge.enabled {
            let mut stage = StageReport::new("cge");
            let out = timed(&mut stage, |st| {
                let params = CgeParams {
                    alpha: cfg.cge.alpha,
                    tol_cge: cfg.cge.tol_cge,
                };
                let res = cge(&z, &params)?;
                st.set("input_columns", Metric::count(z.cols()));
                st.set("rk", Metric::count(res.rk));
                if res.rk == 0 {
                    bail!("CGE found rank 0; nothing to deflate");
                }
                Ok(res.z_out)
            });
            stages.push(stage);
            match out {
                Some(zo) => z = zo,
                None => return Ok(None),
            }
        }
        z
    };
    if only_subspace {
        return Ok(Some(z));
    }

    let mut stage = StageReport::new("basis");
    let basis = timed(&mut stage, |st| {
        st.set("columns", Metric::count(z.cols()));
        let within = n.saturating_mul(z.cols()) <= cfg.cond_limit;
        if within {
            st.set("cond_z", Metric::real(cond2(&z)));
        } else {
            st.set("cond_z", Metric::Sentinel(Sentinel::NotComputed));
        }
        let basis = DeflationBasis::build(op, z.clone())?;
        if within {
            st.set("cond_m", Metric::real(cond2(basis.coarse_matrix())));
        } else {
            st.set("cond_m", Metric::Sentinel(Sentinel::NotComputed));
        }
        Ok(basis)
    });
    stages.push(stage);
    let Some(basis) = basis else { return Ok(None) };

    let mut stage = StageReport::new("deflated-solve");
    timed(&mut stage, |st| {
        let sol = deflated_solve(&basis, b_op, outer, &outer_cfg)?;
        record_solve(st, &sol.inner_report, outer, maxit);
        st.set("relres1", Metric::real(sol.relres1));
        st.set("relres2", Metric::real(sol.relres2));
        ctx.finish_solution(st, &sol.x, sol.inner_report.converged)
    });
    stages.push(stage);
    Ok(None)
}

/// Dense copy of the operator the configured problem is solved with: the
/// matrix itself, or its ILU(0) preconditioned form.
pub fn dense_operator(cfg: &ExperimentConfig) -> Result<DenseMatrix> {
    let a = load_problem(&cfg.problem)?.a;
    if a.n_rows() > cfg.eig_limit {
        bail!("N = {} exceeds eig-limit {}", a.n_rows(), cfg.eig_limit);
    }
    Ok(match &cfg.problem {
        ProblemConfig::MmfileIlu0 { .. } => {
            let f = ilu0_factor(&a)?;
            operator_to_dense(&ilu0_operator(&f, &a)?)
        }
        _ => a.to_dense(),
    })
}

/// Runs one configured computation end to end.
pub fn run_computation(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    Ok(run_mode(cfg, Mode::Full)?.0)
}

/// Builds the deflation subspace of computations #2 to #8 without solving.
pub fn build_subspace(cfg: &ExperimentConfig) -> Result<(ExperimentReport, Option<DenseMatrix>)> {
    run_mode(cfg, Mode::SubspaceOnly)
}

/// Solves with the given basis, or without deflation when `z` is `None`.
pub fn solve_with_basis(cfg: &ExperimentConfig, z: Option<DenseMatrix>) -> Result<ExperimentReport> {
    let mode = match z {
        Some(z) => Mode::GivenBasis(z),
        None => Mode::Plain,
    };
    Ok(run_mode(cfg, mode)?.0)
}

pub fn run_mode(cfg: &ExperimentConfig, mode: Mode) -> Result<(ExperimentReport, Option<DenseMatrix>)> {
    cfg.validate()?;
    let start = Instant::now();
    let loaded = load_problem(&cfg.problem)?;
    let mut stages = vec![loaded.stage];
    let a = loaded.a;
    let b = rhs_ones(&a)?;
    info!("computation #{}: N = {}, nnz = {}", cfg.computation, a.n_rows(), a.nnz());
    let mut z_out = None;

    match &cfg.problem {
        ProblemConfig::MmfileIlu0 { .. } => {
            let mut stage = StageReport::new("ilu0");
            let factors = timed(&mut stage, |st| {
                let f = ilu0_factor(&a)?;
                st.set("patched_pivots", Metric::count(f.patched_pivots.len()));
                Ok(f)
            });
            stages.push(stage);
            if let Some(factors) = factors {
                let op = ilu0_operator(&factors, &a)?;
                let b_op = factors.transform_rhs(&b)?;
                let ctx = Context_ {
                    cfg,
                    a: &a,
                    b: &b,
                    ilu: Some(&factors),
                };
                z_out = run_on_operator(&ctx, &op, &b_op, mode, &mut stages)?;
            }
        }
        _ => {
            let op = CsrOperator::new(&a)?;
            let ctx = Context_ {
                cfg,
                a: &a,
                b: &b,
                ilu: None,
            };
            z_out = run_on_operator(&ctx, &op, &b, mode, &mut stages)?;
        }
    }

    let report = ExperimentReport {
        config: cfg.clone(),
        stages,
        total_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((report, z_out))
}
