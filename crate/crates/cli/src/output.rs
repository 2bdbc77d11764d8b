//! Collects output files in memory and writes them, with a run report, only
//! once a command has finished.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{input, numeric, CliError};

/// Unit statement embedded in every JSON file and run report.
pub const UNITS: &str =
    "frequencies in Hz (ordinary, not angular) unless a field name says rad_per_s; angles in rad; other quantities in SI base units";

pub const REPORT_FILE: &str = "run_report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

/// One pass/fail comparison against a stored expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    /// Human-readable tolerance, e.g. `relative 0.02` or `>= 100`.
    pub tolerance: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub units: String,
    pub inputs: Vec<InputHash>,
    /// File names relative to the output directory, this report last.
    pub outputs: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
    pub wall_clock_s: f64,
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    units: &'a str,
    #[serde(flatten)]
    data: &'a T,
}

pub struct Run {
    command: Vec<String>,
    inputs: Vec<InputHash>,
    files: Vec<(String, Vec<u8>)>,
    metrics: BTreeMap<String, f64>,
    checks: Vec<Check>,
    start: Instant,
}

impl Run {
    pub fn new(command: Vec<String>) -> Self {
        Self {
            command,
            inputs: Vec::new(),
            files: Vec::new(),
            metrics: BTreeMap::new(),
            checks: Vec::new(),
            start: Instant::now(),
        }
    }

    /// Reads and hashes an input file.
    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = fs::read(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
        self.inputs.push(InputHash {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(bytes)
    }

    /// Reads, hashes and parses a JSON input. Errors name the line, column
    /// and field path.
    pub fn read_json<T: DeserializeOwned>(&mut self, path: &Path) -> Result<T, CliError> {
        let bytes = self.read(path)?;
        let de = &mut serde_json::Deserializer::from_slice(&bytes);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            input(format!(
                "{}:{}:{}: field `{field}`: {inner}",
                path.display(),
                inner.line(),
                inner.column()
            ))
        })
    }

    /// Adds a JSON file with the unit statement as its first key.
    pub fn json<T: Serialize>(&mut self, name: &str, data: &T) -> Result<(), CliError> {
        let mut bytes =
            serde_json::to_vec_pretty(&Document { units: UNITS, data }).map_err(numeric)?;
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    pub fn text(&mut self, name: &str, text: String) {
        self.files.push((name.to_string(), text.into_bytes()));
    }

    pub fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.insert(name.into(), value);
    }

    /// Records a check; `passed` is decided by the caller.
    pub fn check(&mut self, name: &str, observed: f64, expected: f64, tolerance: &str, passed: bool) {
        println!(
            "{} {name}: observed {observed:.6e}, expected {expected:.6e} ({tolerance})",
            if passed { "PASS" } else { "FAIL" }
        );
        self.checks.push(Check {
            name: name.to_string(),
            observed,
            expected,
            tolerance: tolerance.to_string(),
            passed: passed && observed.is_finite(),
        });
    }

    /// Checks `|observed/expected − 1| ≤ rel`.
    pub fn check_relative(&mut self, name: &str, observed: f64, expected: f64, rel: f64) {
        let ok = ((observed / expected) - 1.0).abs() <= rel;
        self.check(name, observed, expected, &format!("relative {rel}"), ok);
    }

    /// Writes all files and the run report into `out`. Fails with a numeric
    /// error, before touching the disk, if a metric is not finite.
    pub fn finish(self, out: &Path) -> Result<RunReport, CliError> {
        if let Some((k, v)) = self.metrics.iter().find(|(_, v)| !v.is_finite()) {
            return Err(numeric(format!("metric `{k}` is not finite ({v})")));
        }
        let io = |path: &Path, source| CliError::Io { path: path.display().to_string(), source };
        fs::create_dir_all(out).map_err(|e| io(out, e))?;
        let mut outputs = Vec::with_capacity(self.files.len() + 1);
        for (name, bytes) in &self.files {
            let path: PathBuf = out.join(name);
            fs::write(&path, bytes).map_err(|e| io(&path, e))?;
            outputs.push(name.clone());
        }
        outputs.push(REPORT_FILE.to_string());
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        let report = RunReport {
            command: self.command,
            units: UNITS.to_string(),
            inputs: self.inputs,
            outputs,
            metrics: self.metrics,
            checks: self.checks,
            wall_clock_s: self.start.elapsed().as_secs_f64(),
        };
        let mut bytes = serde_json::to_vec_pretty(&report).map_err(numeric)?;
        bytes.push(b'\n');
        let path = out.join(REPORT_FILE);
        fs::write(&path, bytes).map_err(|e| io(&path, e))?;
        if failed > 0 {
            return Err(CliError::ChecksFailed(failed));
        }
        Ok(report)
    }
}
