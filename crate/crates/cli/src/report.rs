//! JSON reports, CSV tables and atomic file writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{DerivedExponents, ExperimentConfig};
use crate::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// One identity or inequality with its measured deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhs: Option<f64>,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Soft checks are reported but never change the exit code.
    pub asserted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Check {
    /// Passes when `deviation < tolerance`.
    pub fn below(name: &str, deviation: f64, tolerance: f64) -> Self {
        Self { name: name.into(), lhs: None, rhs: None, deviation, tolerance, pass: deviation < tolerance, asserted: true, error: None }
    }

    /// Relative gap |lhs − rhs|/|rhs| against `tolerance`.
    pub fn relative(name: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let deviation = (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE);
        Self { lhs: Some(lhs), rhs: Some(rhs), ..Self::below(name, deviation, tolerance) }
    }

    pub fn flag(name: &str, pass: bool) -> Self {
        Self { pass, ..Self::below(name, if pass { 0.0 } else { 1.0 }, 0.5) }
    }

    pub fn failed(name: &str, err: impl std::fmt::Display) -> Self {
        Self { error: Some(err.to_string()), ..Self::below(name, f64::NAN, 0.0) }
    }

    pub fn soft(mut self) -> Self {
        self.asserted = false;
        self
    }

    pub fn line(&self) -> String {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        let soft = if self.asserted { "" } else { " (soft)" };
        match &self.error {
            Some(e) => format!("{tag} {}{soft}: error: {e}", self.name),
            None => format!("{tag} {}{soft}: deviation {:.3e} (tolerance {:.3e})", self.name, self.deviation, self.tolerance),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub derived: DerivedExponents,
    pub checks: Vec<Check>,
    pub data: Value,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub files: Vec<PathBuf>,
}

impl Report {
    pub fn new(experiment: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.into(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            derived: cfg.derived(),
            checks: Vec::new(),
            data: Value::Null,
            files: Vec::new(),
        }
    }

    /// All asserted checks pass.
    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| c.asserted).all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Write through a temporary sibling and rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// CSV text from a header and rows of numbers.
pub fn csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
