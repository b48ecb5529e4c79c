//! Krylov solvers over an abstract [`LinearOperator`].
//!
//! The same routines solve the original system, the deflated system `P A`,
//! the shifted resolvent systems `(σ I - A)` and ILU-preconditioned systems.

mod bicg;
mod gmres;
mod operator;

pub use bicg::mbicg;
pub use gmres::gmres;
pub use operator::{
    CsrOperator, DenseOperator, DiagonalOperator, LinearOperator, ShiftedOperator,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numcore::{check_len, norm2, randn_vector, Scalar, ZERO};

/// Which Krylov method to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KrylovMethod {
    Gmres,
    Mbicg,
}

impl KrylovMethod {
    pub fn name(self) -> &'static str {
        match self {
            KrylovMethod::Gmres => "gmres",
            KrylovMethod::Mbicg => "mbicg",
        }
    }

    pub fn solve<O: LinearOperator + ?Sized>(
        self,
        op: &O,
        b: &[Scalar],
        cfg: &SolverConfig,
    ) -> Result<SolveReport> {
        match self {
            KrylovMethod::Gmres => gmres(op, b, cfg),
            KrylovMethod::Mbicg => mbicg(op, b, cfg),
        }
    }
}

impl std::str::FromStr for KrylovMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gmres" => Ok(KrylovMethod::Gmres),
            "mbicg" | "bicg" => Ok(KrylovMethod::Mbicg),
            other => Err(Error::InvalidArgument(format!("unknown solver '{other}'"))),
        }
    }
}

impl std::fmt::Display for KrylovMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    Zero,
    Given(Vec<Scalar>),
    /// Standard-normal real entries from a seeded generator.
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Relative residual threshold on `‖b - A x‖ / ‖b‖`.
    pub tol: f64,
    pub maxit: usize,
    /// GMRES cycle length; `None` runs unrestarted.
    pub restart: Option<usize>,
    pub initial_guess: InitialGuess,
}

impl SolverConfig {
    pub fn new(tol: f64, maxit: usize) -> Self {
        Self {
            tol,
            maxit,
            restart: None,
            initial_guess: InitialGuess::Zero,
        }
    }

    pub fn with_restart(mut self, restart: usize) -> Self {
        self.restart = Some(restart);
        self
    }

    pub fn with_initial_guess(mut self, guess: InitialGuess) -> Self {
        self.initial_guess = guess;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidArgument(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.maxit == 0 {
            return Err(Error::InvalidArgument("maxit must be >= 1".into()));
        }
        if self.restart == Some(0) {
            return Err(Error::InvalidArgument("restart must be >= 1".into()));
        }
        Ok(())
    }

    /// Bytes held by the GMRES Krylov basis for an `n`-dimensional problem.
    pub fn gmres_basis_bytes(&self, n: usize) -> usize {
        let k = self.restart.unwrap_or(self.maxit).min(self.maxit) + 1;
        k * n * std::mem::size_of::<Scalar>()
    }

    pub(crate) fn initial_vector(&self, n: usize) -> Result<Vec<Scalar>> {
        match &self.initial_guess {
            InitialGuess::Zero => Ok(vec![ZERO; n]),
            InitialGuess::Given(x0) => {
                check_len("initial guess", n, x0.len())?;
                Ok(x0.clone())
            }
            InitialGuess::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok(randn_vector(&mut rng, n))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x: Vec<Scalar>,
    pub iterations: usize,
    /// One relative residual per iteration.
    pub relres_history: Vec<f64>,
    pub converged: bool,
    /// Smallest relative residual reached (initial residual when no
    /// iteration ran).
    pub best_relres: f64,
    /// True relative residual `‖b - A x‖ / ‖b‖` of the returned `x`.
    pub true_relres: f64,
    /// GMRES: the Givens estimate and the true residual disagree by more
    /// than `10 tol`.
    pub residual_gap: bool,
    /// BiCG: the recurrence broke down (`ρ` or `p̃^H A p` vanished).
    pub breakdown: bool,
}

pub(crate) fn true_relres<O: LinearOperator + ?Sized>(
    op: &O,
    b: &[Scalar],
    x: &[Scalar],
    bnorm: f64,
    work: &mut [Scalar],
) -> f64 {
    op.apply(x, work);
    for (w, bi) in work.iter_mut().zip(b) {
        *w = bi - *w;
    }
    let r = norm2(work);
    if bnorm > 0.0 {
        r / bnorm
    } else {
        r
    }
}

/// Shared pre-flight for both solvers; returns `(x0, ‖b‖)`.
pub(crate) fn prepare<O: LinearOperator + ?Sized>(
    op: &O,
    b: &[Scalar],
    cfg: &SolverConfig,
) -> Result<(Vec<Scalar>, f64)> {
    cfg.validate()?;
    check_len("right-hand side", op.dim(), b.len())?;
    if op.dim() == 0 {
        return Err(Error::InvalidArgument("empty system".into()));
    }
    if !crate::numcore::all_finite(b) {
        return Err(Error::NonFinite("right-hand side"));
    }
    let x0 = cfg.initial_vector(op.dim())?;
    Ok((x0, norm2(b)))
}
