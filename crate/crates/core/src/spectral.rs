//! Contour-integral construction of the deflation subspace.
//!
//! For a circle `Γ = {c + r e^{πθi} : θ ∈ [-1, 1]}` the spectral projector
//! applied to a probe block `Y` is
//!
//! ```text
//! Z = (r/2) ∫ e^{πθi} ((c + r e^{πθi}) I - A)⁻¹ Y dθ
//!   ≈ (r/2) Σ_k ω_k e^{πθ_k i} X_k,     (σ_k I - A) X_k = Y
//! ```
//!
//! with Legendre–Gauss nodes `θ_k`. The `m q` shifted solves are independent
//! and run as a parallel map; the weighted sum is reduced over `k` ascending
//! so the result does not depend on scheduling.

use log::{debug, info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::krylov::{InitialGuess, KrylovMethod, LinearOperator, ShiftedOperator, SolverConfig};
use crate::numcore::{axpy, norm2, randn_vector, DenseMatrix, Scalar};
use crate::quadrature::{legendre_gauss, QuadratureRule};

/// Circle `D(c, r)` with a Legendre–Gauss rule of order `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contour {
    pub c: Scalar,
    pub r: f64,
    pub q: usize,
}

impl Contour {
    pub fn new(c: Scalar, r: f64, q: usize) -> Result<Self> {
        let contour = Self { c, r, q };
        contour.validate()?;
        Ok(contour)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.r.is_finite() || self.r <= 0.0 {
            return Err(Error::InvalidArgument(format!("contour radius must be > 0, got {}", self.r)));
        }
        if !self.c.re.is_finite() || !self.c.im.is_finite() {
            return Err(Error::NonFinite("contour center"));
        }
        if self.q == 0 {
            return Err(Error::InvalidArgument("quadrature order must be >= 1".into()));
        }
        Ok(())
    }

    /// `e^{πθi}`
    pub fn direction(theta: f64) -> Scalar {
        Scalar::from_polar(1.0, std::f64::consts::PI * theta)
    }

    /// `c + r e^{πθi}`
    pub fn point(&self, theta: f64) -> Scalar {
        self.c + self.r * Self::direction(theta)
    }

    /// `|λ - c| < r`, with points within `1e-12` of the circle counted as inside.
    pub fn contains(&self, lambda: Scalar) -> bool {
        (lambda - self.c).norm() - self.r <= 1e-12
    }
}

/// Standard-normal `N × m` probe block promoted to complex.
pub fn random_probe_block(n: usize, m: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = randn_vector(&mut rng, n * m);
    DenseMatrix::from_col_major(n, m, data).expect("length n*m by construction")
}

/// Initial guesses for the shifted systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftedGuess {
    Zero,
    /// Independent seeded normal vector per `(k, j)` pair.
    Random { seed: u64 },
}

/// Everything needed to form `Z` for one operator.
#[derive(Debug, Clone)]
pub struct SubspaceJob {
    pub y: DenseMatrix,
    pub contour: Contour,
    pub inner_solver: KrylovMethod,
    pub inner_cfg: SolverConfig,
    pub initial_guess: ShiftedGuess,
    /// Worker threads for the shifted solves; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl SubspaceJob {
    /// Inner tolerance `1e-15`, `maxit = 500`, zero initial guesses.
    pub fn new(y: DenseMatrix, contour: Contour, inner_solver: KrylovMethod) -> Self {
        Self {
            y,
            contour,
            inner_solver,
            inner_cfg: SolverConfig::new(1e-15, 500),
            initial_guess: ShiftedGuess::Zero,
            threads: None,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.contour.validate()?;
        self.inner_cfg.validate()?;
        if self.y.rows() != n {
            return Err(Error::DimensionMismatch {
                context: "probe block rows",
                expected: n,
                got: self.y.rows(),
            });
        }
        if self.y.cols() == 0 {
            return Err(Error::InvalidArgument("probe block needs at least one column".into()));
        }
        self.y.ensure_finite("probe block")
    }

    fn pair_config(&self, k: usize, j: usize) -> SolverConfig {
        let mut cfg = self.inner_cfg.clone();
        cfg.initial_guess = match self.initial_guess {
            ShiftedGuess::Zero => InitialGuess::Zero,
            ShiftedGuess::Random { seed } => InitialGuess::Random {
                seed: seed.wrapping_add((k * self.y.cols() + j) as u64),
            },
        };
        cfg
    }
}

/// Outcome of one shifted solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedSolveRecord {
    pub node: usize,
    pub column: usize,
    pub shift: Scalar,
    pub iterations: usize,
    /// `‖y_j - (σ_k I - A) x‖ / ‖y_j‖` of the returned iterate.
    pub relres: f64,
    pub converged: bool,
    pub breakdown: bool,
}

/// Per-system records and the residual range over all of them.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualStats {
    pub records: Vec<ShiftedSolveRecord>,
    pub min_relres: f64,
    pub max_relres: f64,
}

impl ResidualStats {
    fn from_records(records: Vec<ShiftedSolveRecord>) -> Self {
        let (min_relres, max_relres) = records.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| {
            (lo.min(r.relres), hi.max(r.relres))
        });
        Self {
            records,
            min_relres,
            max_relres,
        }
    }

    pub fn total_iterations(&self) -> usize {
        self.records.iter().map(|r| r.iterations).sum()
    }

    pub fn unconverged(&self) -> usize {
        self.records.iter().filter(|r| !r.converged).count()
    }

    pub fn breakdowns(&self) -> usize {
        self.records.iter().filter(|r| r.breakdown).count()
    }
}

/// Solutions `X_k` of `(σ_k I - A) X_k = Y`, one per node, plus residual stats.
#[derive(Debug, Clone)]
pub struct ShiftedBatch {
    pub rule: QuadratureRule,
    pub solutions: Vec<DenseMatrix>,
    pub stats: ResidualStats,
}

fn run_in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Solves all `m q` shifted systems. A breakdown or non-convergence flags the
/// record; only hard errors (non-finite data, bad dimensions) abort.
pub fn shifted_solve_batch<O: LinearOperator>(op: &O, job: &SubspaceJob) -> Result<ShiftedBatch> {
    let n = op.dim();
    job.validate(n)?;
    let rule = legendre_gauss(job.contour.q)?;
    let m = job.y.cols();
    let q = rule.order();
    let shifts: Vec<Scalar> = rule.nodes().iter().map(|&t| job.contour.point(t)).collect();
    info!(
        "shifted solves: {} systems ({q} nodes x {m} columns), solver {}",
        m * q,
        job.inner_solver
    );

    let pairs: Vec<(usize, usize)> = (0..q).flat_map(|k| (0..m).map(move |j| (k, j))).collect();
    let results: Vec<Result<(Vec<Scalar>, ShiftedSolveRecord)>> = run_in_pool(job.threads, || {
        pairs
            .par_iter()
            .map(|&(k, j)| {
                let shifted = ShiftedOperator::new(op, shifts[k]);
                let y = job.y.col(j);
                let rep = job.inner_solver.solve(&shifted, y, &job.pair_config(k, j))?;
                let record = ShiftedSolveRecord {
                    node: k,
                    column: j,
                    shift: shifts[k],
                    iterations: rep.iterations,
                    relres: rep.true_relres,
                    converged: rep.converged,
                    breakdown: rep.breakdown,
                };
                Ok((rep.x, record))
            })
            .collect()
    })?;

    let mut solutions = vec![DenseMatrix::zeros(n, m); q];
    let mut records = Vec::with_capacity(m * q);
    for res in results {
        let (x, record) = res?;
        if !record.converged {
            debug!(
                "shifted solve (node {}, column {}) stopped at relres {:.2e}",
                record.node, record.column, record.relres
            );
        }
        solutions[record.node].col_mut(record.column).copy_from_slice(&x);
        records.push(record);
    }
    let stats = ResidualStats::from_records(records);
    if stats.unconverged() > 0 {
        warn!(
            "{} of {} shifted solves stopped short of tol {:.1e}; worst relres {:.2e}",
            stats.unconverged(),
            m * q,
            job.inner_cfg.tol,
            stats.max_relres
        );
    }
    Ok(ShiftedBatch { rule, solutions, stats })
}

/// `Z ≈ P_Γ Y` together with the shifted-solve statistics.
#[derive(Debug, Clone)]
pub struct SubspaceResult {
    pub z: DenseMatrix,
    pub stats: ResidualStats,
}

/// `Z = (r/2) Σ_k ω_k e^{πθ_k i} X_k`, summed over `k` ascending.
pub fn compute_z<O: LinearOperator>(op: &O, job: &SubspaceJob) -> Result<SubspaceResult> {
    let batch = shifted_solve_batch(op, job)?;
    let n = op.dim();
    let m = job.y.cols();
    let mut z = DenseMatrix::zeros(n, m);
    for ((theta, w), xk) in batch.rule.iter().zip(&batch.solutions) {
        let coef = 0.5 * job.contour.r * w * Contour::direction(theta);
        for j in 0..m {
            axpy(coef, xk.col(j), z.col_mut(j));
        }
    }
    z.ensure_finite("contour subspace")?;
    info!(
        "Z formed: {n} x {m}, shifted relres range [{:.2e}, {:.2e}], |Z|_F = {:.3e}",
        batch.stats.min_relres,
        batch.stats.max_relres,
        z.frobenius_norm()
    );
    Ok(SubspaceResult { z, stats: batch.stats })
}

/// Norm of each column, handy for spotting columns the projector annihilated.
pub fn column_norms(z: &DenseMatrix) -> Vec<f64> {
    z.columns().map(norm2).collect()
}
