//! Experiment configuration: presets per computation, flat `key = value`
//! files and command-line overrides all funnel through [`ExperimentConfig::set`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use contour_deflation::krylov::KrylovMethod;
use contour_deflation::problems::ConvectionForm;
use contour_deflation::Scalar;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemConfig {
    Convdiff {
        n: usize,
        re: f64,
        #[serde(with = "form_serde")]
        form: ConvectionForm,
    },
    Mmfile {
        path: PathBuf,
    },
    /// Matrix Market file solved through its two-sided ILU(0) preconditioned form.
    MmfileIlu0 {
        path: PathBuf,
    },
}

mod form_serde {
    use contour_deflation::problems::ConvectionForm;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(f: &ConvectionForm, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match f {
            ConvectionForm::Additive => "additive",
            ConvectionForm::AsPrinted => "as-printed",
        })
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ConvectionForm, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    Gmres,
    Mbicg,
}

impl From<Solver> for KrylovMethod {
    fn from(s: Solver) -> Self {
        match s {
            Solver::Gmres => KrylovMethod::Gmres,
            Solver::Mbicg => KrylovMethod::Mbicg,
        }
    }
}

impl std::str::FromStr for Solver {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<KrylovMethod>()? {
            KrylovMethod::Gmres => Ok(Solver::Gmres),
            KrylovMethod::Mbicg => Ok(Solver::Mbicg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerInit {
    Zero,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourConfig {
    pub c_re: f64,
    pub c_im: f64,
    pub r: f64,
    pub q: usize,
}

impl ContourConfig {
    pub fn center(&self) -> Scalar {
        Scalar::new(self.c_re, self.c_im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerConfig {
    pub solver: Solver,
    pub tol: f64,
    pub maxit: usize,
    pub init: InnerInit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterConfig {
    pub solver: Solver,
    pub tol: f64,
    /// `None` resolves to `1000 N` for computation 1 and `10 N` otherwise.
    pub maxit: Option<usize>,
    pub restart: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgeConfig {
    pub enabled: bool,
    pub alpha: f64,
    pub tol_cge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// 1: plain solve; 2: exact eigenvectors; 3-4: contour subspace;
    /// 5-6: contour subspace + CGE; 7-8: as 3-4 with random inner guesses.
    pub computation: u8,
    pub problem: ProblemConfig,
    pub contour: ContourConfig,
    pub m: usize,
    pub inner: InnerConfig,
    pub outer: OuterConfig,
    pub cge: CgeConfig,
    pub seed: u64,
    pub threads: Option<usize>,
    /// Largest `N` for which dense eigen-decompositions are attempted.
    pub eig_limit: usize,
    /// Largest `N m` for which condition numbers of `Z` and `M` are computed.
    pub cond_limit: usize,
}

impl ExperimentConfig {
    /// Defaults for computation `id`.
    pub fn preset(id: u8, problem: ProblemConfig) -> Result<Self> {
        if !(1..=8).contains(&id) {
            bail!("computation must be in 1..=8, got {id}");
        }
        let inner_maxit = if [4, 6, 8].contains(&id) { 1000 } else { 500 };
        Ok(Self {
            computation: id,
            problem,
            contour: ContourConfig {
                c_re: 0.0,
                c_im: 0.0,
                r: 0.5,
                q: 16,
            },
            m: 10,
            inner: InnerConfig {
                solver: Solver::Gmres,
                tol: 1e-15,
                maxit: inner_maxit,
                init: if id >= 7 { InnerInit::Random } else { InnerInit::Zero },
            },
            outer: OuterConfig {
                solver: Solver::Gmres,
                tol: 1e-7,
                maxit: None,
                restart: None,
            },
            cge: CgeConfig {
                enabled: id == 5 || id == 6,
                alpha: 1e-8,
                tol_cge: 1e-2,
            },
            seed: 0,
            threads: None,
            eig_limit: 2000,
            cond_limit: 2_000_000,
        })
    }

    pub fn outer_maxit(&self, n: usize) -> usize {
        self.outer
            .maxit
            .unwrap_or(if self.computation == 1 { 1000 * n } else { 10 * n })
    }

    /// Applies one `key = value` setting; keys are kebab-case.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let key = key.trim().replace('_', "-");
        let f = || v.parse::<f64>().with_context(|| format!("{key}: expected a number, got '{v}'"));
        let u = || v.parse::<usize>().with_context(|| format!("{key}: expected an integer, got '{v}'"));
        let b = || match v.to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" | "on" => Ok(true),
            "false" | "no" | "0" | "off" => Ok(false),
            _ => Err(anyhow!("{key}: expected a boolean, got '{v}'")),
        };
        match key.as_str() {
            "computation" => {
                let id: u8 = v.parse().with_context(|| format!("computation: bad id '{v}'"))?;
                *self = Self::preset(id, self.problem.clone())?;
            }
            "problem" => {
                self.problem = match (v, &self.problem) {
                    ("convdiff", ProblemConfig::Convdiff { .. }) => self.problem.clone(),
                    ("convdiff", _) => ProblemConfig::Convdiff {
                        n: 99,
                        re: 8000.0,
                        form: ConvectionForm::default(),
                    },
                    ("mmfile", ProblemConfig::Mmfile { path } | ProblemConfig::MmfileIlu0 { path }) => {
                        ProblemConfig::Mmfile { path: path.clone() }
                    }
                    ("mmfile-ilu0", ProblemConfig::Mmfile { path } | ProblemConfig::MmfileIlu0 { path }) => {
                        ProblemConfig::MmfileIlu0 { path: path.clone() }
                    }
                    ("mmfile", _) => ProblemConfig::Mmfile { path: PathBuf::new() },
                    ("mmfile-ilu0", _) => ProblemConfig::MmfileIlu0 { path: PathBuf::new() },
                    _ => bail!("problem must be convdiff, mmfile or mmfile-ilu0, got '{v}'"),
                }
            }
            "n" | "re" | "form" => {
                let ProblemConfig::Convdiff { n, re, form } = &mut self.problem else {
                    bail!("'{key}' only applies to the convdiff problem");
                };
                match key.as_str() {
                    "n" => *n = u()?,
                    "re" => *re = f()?,
                    _ => *form = v.parse()?,
                }
            }
            "matrix" => {
                self.problem = match &self.problem {
                    ProblemConfig::MmfileIlu0 { .. } => ProblemConfig::MmfileIlu0 { path: v.into() },
                    _ => ProblemConfig::Mmfile { path: v.into() },
                }
            }
            "ilu0" => {
                let on = b()?;
                self.problem = match (&self.problem, on) {
                    (ProblemConfig::Mmfile { path }, true) => ProblemConfig::MmfileIlu0 { path: path.clone() },
                    (ProblemConfig::MmfileIlu0 { path }, false) => ProblemConfig::Mmfile { path: path.clone() },
                    (ProblemConfig::Convdiff { .. }, true) => bail!("ilu0 needs a Matrix Market problem"),
                    (p, _) => p.clone(),
                }
            }
            "contour-c" => {
                let (re, im) = parse_complex(v)?;
                self.contour.c_re = re;
                self.contour.c_im = im;
            }
            "contour-r" => self.contour.r = f()?,
            "q" => self.contour.q = u()?,
            "m" => self.m = u()?,
            "inner-solver" => self.inner.solver = v.parse()?,
            "inner-tol" => self.inner.tol = f()?,
            "inner-maxit" => self.inner.maxit = u()?,
            "inner-init" => {
                self.inner.init = match v {
                    "zero" => InnerInit::Zero,
                    "random" => InnerInit::Random,
                    _ => bail!("inner-init must be zero or random, got '{v}'"),
                }
            }
            "outer-solver" | "solver" => self.outer.solver = v.parse()?,
            "outer-tol" | "tol" => self.outer.tol = f()?,
            "outer-maxit" | "maxit" => self.outer.maxit = Some(u()?),
            "outer-restart" | "restart" => self.outer.restart = Some(u()?),
            "cge" => self.cge.enabled = b()?,
            "cge-alpha" | "alpha" => self.cge.alpha = f()?,
            "cge-tol" | "tol-cge" => self.cge.tol_cge = f()?,
            "seed" => self.seed = v.parse().with_context(|| format!("seed: bad value '{v}'"))?,
            "threads" => self.threads = Some(u()?),
            "eig-limit" => self.eig_limit = u()?,
            "cond-limit" => self.cond_limit = u()?,
            _ => bail!("unknown configuration key '{key}'"),
        }
        Ok(())
    }

    /// Applies settings with `computation` first (its preset resets the rest),
    /// then the problem selection, then everything else in order.
    pub fn apply(&mut self, settings: &[(String, String)]) -> Result<()> {
        let rank = |k: &str| match k {
            "computation" => 0,
            "problem" => 1,
            "matrix" | "ilu0" => 2,
            _ => 3,
        };
        let mut ordered: Vec<&(String, String)> = settings.iter().collect();
        ordered.sort_by_key(|(k, _)| rank(k));
        for (k, v) in ordered {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.contour.r <= 0.0 || self.contour.q == 0 {
            bail!("contour needs r > 0 and q >= 1");
        }
        if self.m == 0 {
            bail!("m must be >= 1");
        }
        if let ProblemConfig::Mmfile { path } | ProblemConfig::MmfileIlu0 { path } = &self.problem {
            if path.as_os_str().is_empty() {
                bail!("a Matrix Market problem needs a matrix path");
            }
        }
        Ok(())
    }
}

/// `re` or `re,im`.
pub fn parse_complex(v: &str) -> Result<(f64, f64)> {
    let mut parts = v.split(',').map(str::trim);
    let re = parts.next().unwrap_or("").parse().with_context(|| format!("bad complex number '{v}'"))?;
    let im = match parts.next() {
        Some(s) => s.parse().with_context(|| format!("bad complex number '{v}'"))?,
        None => 0.0,
    };
    if parts.next().is_some() {
        bail!("bad complex number '{v}'");
    }
    Ok((re, im))
}

/// Flat `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key = value", no + 1))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config_text(&text)
}

/// Settings as an ordered map, later keys winning.
pub fn merge(layers: &[Vec<(String, String)>]) -> Vec<(String, String)> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for layer in layers {
        for (k, v) in layer {
            let k = k.replace('_', "-");
            if map.insert(k.clone(), v.clone()).is_none() {
                order.push(k);
            }
        }
    }
    order
        .into_iter()
        .map(|k| {
            let v = map[&k].clone();
            (k, v)
        })
        .collect()
}
