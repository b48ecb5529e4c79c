//! Machine-readable experiment reports.
//!
//! JSON is the canonical form. Every numeric field is either finite or one of
//! the string sentinels `"diverged"`, `"inf"`, `"nan"` or `"not computed"`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sentinel {
    #[serde(rename = "diverged")]
    Diverged,
    #[serde(rename = "inf")]
    Infinite,
    #[serde(rename = "nan")]
    NotANumber,
    #[serde(rename = "not computed")]
    NotComputed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Metric {
    Count(u64),
    Value(f64),
    Flag(bool),
    Sentinel(Sentinel),
    Text(String),
}

impl Metric {
    /// Finite values pass through; `±∞` and NaN become sentinels.
    pub fn real(x: f64) -> Self {
        if x.is_finite() {
            Metric::Value(x)
        } else if x.is_nan() {
            Metric::Sentinel(Sentinel::NotANumber)
        } else {
            Metric::Sentinel(Sentinel::Infinite)
        }
    }

    pub fn count(n: usize) -> Self {
        Metric::Count(n as u64)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Metric::Count(c) => Some(*c as f64),
            Metric::Value(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Metric::Flag(b) => Some(*b),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Metric::Count(c) => c.to_string(),
            Metric::Value(v) => format!("{v:.6e}"),
            Metric::Flag(b) => b.to_string(),
            Metric::Sentinel(s) => serde_json::to_value(s)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
            Metric::Text(t) => t.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub seconds: f64,
    /// `false` when the stage raised an error; `error` then holds the message.
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub metrics: BTreeMap<String, Metric>,
}

impl StageReport {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            seconds: 0.0,
            ok: true,
            error: None,
            metrics: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, key: &str, m: Metric) {
        self.metrics.insert(key.to_string(), m);
    }

    pub fn metric(&self, key: &str) -> Option<&Metric> {
        self.metrics.get(key)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub stages: Vec<StageReport>,
    pub total_seconds: f64,
}

impl ExperimentReport {
    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per stage: `stage,seconds,ok,key=value;key=value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "computation,stage,seconds,ok,metrics")?;
        for s in &self.stages {
            let metrics: Vec<String> = s.metrics.iter().map(|(k, v)| format!("{k}={}", v.render())).collect();
            writeln!(
                out,
                "{},{},{:.3},{},\"{}\"",
                self.config.computation,
                s.name,
                s.seconds,
                s.ok,
                metrics.join(";")
            )?;
        }
        Ok(())
    }

    /// Human-readable summary.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "computation #{} ({:.2} s)", self.config.computation, self.total_seconds)?;
        for s in &self.stages {
            let status = if s.ok { "" } else { " [failed]" };
            writeln!(out, "  {} ({:.2} s){status}", s.name, s.seconds)?;
            if let Some(e) = &s.error {
                writeln!(out, "    error: {e}")?;
            }
            for (k, v) in &s.metrics {
                writeln!(out, "    {k:<22} {}", v.render())?;
            }
        }
        Ok(())
    }

    pub fn emit(&self, format: ReportFormat, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = std::io::BufWriter::new(file);
        match format {
            ReportFormat::Json => writeln!(out, "{}", self.to_json()?)?,
            ReportFormat::Csv => self.write_csv(&mut out)?,
            ReportFormat::Text => self.write_text(&mut out)?,
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
    Text,
}
