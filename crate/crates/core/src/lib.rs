//! Deflated Krylov solvers whose deflation subspace comes from a
//! contour-integral spectral projector.
//!
//! The pieces:
//!
//! * [`numcore`]: complex dense/sparse primitives.
//! * [`krylov`]: GMRES and best-iterate BiCG over any [`krylov::LinearOperator`].
//! * [`precond`]: ILU(0) and the two-sided preconditioned operator.
//! * [`quadrature`] + [`spectral`]: `Z ≈ P_Γ Y` by Legendre–Gauss quadrature
//!   of the resolvent over a circle.
//! * [`cge`]: complete-pivot elimination on `Z^H Z` to drop nearly dependent
//!   columns.
//! * [`deflation`]: projectors `P`, `P̃` and the deflated solve.
//! * [`eigtools`]: dense eigenvalues/eigenvectors, condition numbers and the
//!   GMRES ellipse bound.
//! * [`problems`]: the convection–diffusion test matrix.
//! * [`mmio`]: Matrix Market I/O.

pub mod cge;
pub mod deflation;
pub mod eigtools;
pub mod error;
pub mod krylov;
pub mod mmio;
pub mod numcore;
pub mod precond;
pub mod problems;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
pub use numcore::{DenseMatrix, Scalar, SparseMatrix};
