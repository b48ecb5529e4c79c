//! Experiment harness for contour-integral deflated Krylov solvers: presets
//! for the eight computations, a staged pipeline and JSON/CSV reports.

pub mod config;
pub mod pipeline;
pub mod report;

pub use config::{ExperimentConfig, ProblemConfig};
pub use pipeline::{build_subspace, dense_operator, load_problem, run_computation, run_mode, solve_with_basis, Mode};
pub use report::{ExperimentReport, Metric, ReportFormat, Sentinel, StageReport};
