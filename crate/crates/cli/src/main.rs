use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use contour_deflation::cge::{cge, CgeParams};
use contour_deflation::eigtools::{cond2, dense_eigenvalues, SpectrumReport};
use contour_deflation::mmio::{read_matrix_market, write_matrix_market, MmMatrix};
use contour_deflation::problems::{convdiff_assemble, rhs_ones, ConvDiffSpec};
use contour_deflation::spectral::Contour;
use contour_deflation::DenseMatrix;
use contour_deflation_cli::config::{merge, read_config_file};
use contour_deflation_cli::{
    build_subspace, dense_operator, run_computation, solve_with_basis, ExperimentConfig, ExperimentReport,
    ProblemConfig, ReportFormat,
};

#[derive(Parser)]
#[command(name = "cdeflate", version, about = "Contour-integral deflated GMRES/MBiCG experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the convection-diffusion matrix (and optionally b = A*1) as Matrix Market.
    GenProblem {
        #[command(flatten)]
        exp: ExpFlags,
        #[arg(short, long)]
        out: PathBuf,
        /// Also write the right-hand side b = A*1.
        #[arg(long)]
        rhs: Option<PathBuf>,
    },
    /// Dense spectrum of the problem operator and the count inside the contour.
    Eig {
        #[command(flatten)]
        exp: ExpFlags,
        /// CSV dump of all eigenvalues (`re,im`).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Build the deflation subspace Z (after CGE when enabled).
    ComputeZ {
        #[command(flatten)]
        exp: ExpFlags,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        report: ReportFlags,
    },
    /// Select well-conditioned columns of a stored basis by complete-pivot elimination.
    Cge {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-2)]
        tol_cge: f64,
    },
    /// Solve A x = A*1, deflated with a stored basis when one is given.
    Solve {
        #[command(flatten)]
        exp: ExpFlags,
        /// Matrix Market file holding Z.
        #[arg(long)]
        basis: Option<PathBuf>,
        #[command(flatten)]
        report: ReportFlags,
    },
    /// Run a computation preset end to end.
    Run {
        #[command(flatten)]
        exp: ExpFlags,
        #[command(flatten)]
        report: ReportFlags,
    },
    /// Re-render a JSON report.
    Report {
        input: PathBuf,
        #[command(flatten)]
        report: ReportFlags,
    },
}

#[derive(Args)]
struct ReportFlags {
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
    /// Destination file; standard output when absent.
    #[arg(long = "report-out")]
    report_out: Option<PathBuf>,
}

/// Experiment settings; any flag overrides the same key from `--config`.
#[derive(Args, Default)]
struct ExpFlags {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    computation: Option<String>,
    /// convdiff, mmfile or mmfile-ilu0.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    re: Option<String>,
    /// additive or as-printed.
    #[arg(long)]
    form: Option<String>,
    /// Matrix Market input; selects the mmfile problem.
    #[arg(long)]
    matrix: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    ilu0: Option<String>,
    /// Contour center as `re` or `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    contour_c: Option<String>,
    #[arg(long)]
    contour_r: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    inner_solver: Option<String>,
    #[arg(long)]
    inner_tol: Option<String>,
    #[arg(long)]
    inner_maxit: Option<String>,
    /// zero or random.
    #[arg(long)]
    inner_init: Option<String>,
    #[arg(long)]
    outer_solver: Option<String>,
    #[arg(long)]
    outer_tol: Option<String>,
    #[arg(long)]
    outer_maxit: Option<String>,
    #[arg(long)]
    outer_restart: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    cge: Option<String>,
    #[arg(long)]
    cge_alpha: Option<String>,
    #[arg(long)]
    cge_tol: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    #[arg(long)]
    eig_limit: Option<String>,
    #[arg(long)]
    cond_limit: Option<String>,
}

impl ExpFlags {
    fn settings(&self) -> Vec<(String, String)> {
        let pairs = [
            ("computation", &self.computation),
            ("problem", &self.problem),
            ("n", &self.n),
            ("re", &self.re),
            ("form", &self.form),
            ("matrix", &self.matrix),
            ("ilu0", &self.ilu0),
            ("contour-c", &self.contour_c),
            ("contour-r", &self.contour_r),
            ("q", &self.q),
            ("m", &self.m),
            ("inner-solver", &self.inner_solver),
            ("inner-tol", &self.inner_tol),
            ("inner-maxit", &self.inner_maxit),
            ("inner-init", &self.inner_init),
            ("outer-solver", &self.outer_solver),
            ("outer-tol", &self.outer_tol),
            ("outer-maxit", &self.outer_maxit),
            ("outer-restart", &self.outer_restart),
            ("cge", &self.cge),
            ("cge-alpha", &self.cge_alpha),
            ("cge-tol", &self.cge_tol),
            ("seed", &self.seed),
            ("threads", &self.threads),
            ("eig-limit", &self.eig_limit),
            ("cond-limit", &self.cond_limit),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }

    /// Preset #`default_id` on the default grid, then the file, then the flags.
    fn resolve(&self, default_id: u8) -> Result<ExperimentConfig> {
        let problem = ProblemConfig::Convdiff {
            n: 99,
            re: 8000.0,
            form: Default::default(),
        };
        let mut cfg = ExperimentConfig::preset(default_id, problem)?;
        let mut layers = Vec::new();
        if let Some(path) = &self.config {
            layers.push(read_config_file(path)?);
        }
        layers.push(self.settings());
        cfg.apply(&merge(&layers))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(report: &ExperimentReport, flags: &ReportFlags) -> Result<()> {
    if let Some(path) = &flags.report_out {
        return report.emit(flags.format, path);
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match flags.format {
        ReportFormat::Json => writeln!(out, "{}", report.to_json()?)?,
        ReportFormat::Csv => report.write_csv(&mut out)?,
        ReportFormat::Text => report.write_text(&mut out)?,
    }
    Ok(())
}

fn read_basis(path: &Path) -> Result<DenseMatrix> {
    let read = read_matrix_market(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(read.matrix.into_dense())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenProblem { exp, out, rhs } => {
            let cfg = exp.resolve(1)?;
            let ProblemConfig::Convdiff { n, re, form } = cfg.problem else {
                bail!("gen-problem needs the convdiff problem");
            };
            let a = convdiff_assemble(&ConvDiffSpec::new(n, re).with_form(form))?;
            if let Some(path) = rhs {
                let b = rhs_ones(&a)?;
                let col = DenseMatrix::from_fn(b.len(), 1, |i, _| b[i]);
                write_matrix_market(&path, &MmMatrix::Dense(col))?;
            }
            println!("N = {}, nnz = {}", a.n_rows(), a.nnz());
            write_matrix_market(&out, &MmMatrix::Sparse(a))?;
        }
        Command::Eig { exp, csv } => {
            let cfg = exp.resolve(2)?;
            let dense = dense_operator(&cfg)?;
            let contour = Contour::new(cfg.contour.center(), cfg.contour.r, cfg.contour.q)?;
            let spectrum = SpectrumReport::new(dense_eigenvalues(&dense)?, &contour);
            println!("N = {}", dense.rows());
            println!("inside contour: {}", spectrum.inside_count);
            println!("min |lambda|: {:.6e}", spectrum.min_distance_to_origin);
            if let Some(path) = csv {
                let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                spectrum.write_csv(std::io::BufWriter::new(file))?;
            }
        }
        Command::ComputeZ { exp, out, report } => {
            let cfg = exp.resolve(3)?;
            let (rep, z) = build_subspace(&cfg)?;
            emit(&rep, &report)?;
            match z {
                Some(z) => write_matrix_market(&out, &MmMatrix::Dense(z))?,
                None => log::warn!("no subspace produced; {} not written", out.display()),
            }
        }
        Command::Cge {
            input,
            out,
            alpha,
            tol_cge,
        } => {
            let z = read_basis(&input)?;
            let res = cge(&z, &CgeParams { alpha, tol_cge })?;
            println!("input columns: {}", z.cols());
            println!("rk: {}", res.rk);
            println!("kept: {:?}", res.columns);
            if res.rk > 0 {
                println!("cond(Z_out): {:.6e}", cond2(&res.z_out));
                write_matrix_market(&out, &MmMatrix::Dense(res.z_out))?;
            } else {
                log::warn!("rank 0; {} not written", out.display());
            }
        }
        Command::Solve { exp, basis, report } => {
            let cfg = exp.resolve(1)?;
            let z = basis.as_deref().map(read_basis).transpose()?;
            emit(&solve_with_basis(&cfg, z)?, &report)?;
        }
        Command::Run { exp, report } => {
            let cfg = exp.resolve(1)?;
            emit(&run_computation(&cfg)?, &report)?;
        }
        Command::Report { input, report } => {
            let text = std::fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            emit(&ExperimentReport::from_json(&text)?, &report)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
