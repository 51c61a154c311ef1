//! Reports: per-check records, constant estimates, JSON and CSV output and
//! the determinism hash.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ExperimentError, Result};

pub const SCHEMA: &str = "varlex-report/1";

/// Non-finite floats are written as the strings `"inf"`, `"-inf"`, `"nan"`.
mod lenient_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// An estimate; never affects the exit code.
    Recorded,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Recorded => "recorded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub suite: String,
    pub name: String,
    /// The mathematical statement the check exercises.
    pub location: String,
    pub status: Status,
    #[serde(with = "lenient_f64")]
    pub lhs: f64,
    #[serde(with = "lenient_f64")]
    pub rhs: f64,
    #[serde(with = "lenient_f64")]
    pub ratio: f64,
    #[serde(with = "lenient_f64")]
    pub tolerance: f64,
    pub seed: u64,
    /// Number of grid cells.
    pub grid: usize,
}

/// `lhs / rhs`, with `0/0 = 0`.
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs != 0.0 {
        lhs / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Empirical estimates of constants the theory leaves unspecified.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimates {
    pub c_n_hat: Option<f64>,
    pub c_delta_n_hat: Option<f64>,
    pub lerner_c_hat: Option<f64>,
    pub crw_ratio_lo: Option<f64>,
    pub crw_ratio_hi: Option<f64>,
    /// Per-grid values and drifts, keyed by descriptive names.
    pub extra: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub seed: u64,
    pub sizes: Vec<usize>,
    /// Unix seconds; excluded from the determinism hash.
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub suite: String,
    pub checks: Vec<CheckRecord>,
    pub estimates: Estimates,
    pub trials: usize,
    pub skipped: usize,
    pub diagnostics: Vec<String>,
    pub environment: Environment,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    suite: &'a str,
    check: &'a str,
    location: &'a str,
    status: &'a str,
    lhs: f64,
    rhs: f64,
    ratio: f64,
    tolerance: f64,
    seed: u64,
    grid: usize,
}

impl ExperimentReport {
    pub fn new(suite: &str, seed: u64, sizes: &[usize]) -> Self {
        Self {
            schema: SCHEMA.to_string(),
            suite: suite.to_string(),
            checks: Vec::new(),
            estimates: Estimates::default(),
            trials: 0,
            skipped: 0,
            diagnostics: Vec::new(),
            environment: Environment {
                seed,
                sizes: sizes.to_vec(),
                timestamp: None,
            },
        }
    }

    /// Adds `lhs <= rhs * (1 + tol)` as a pass/fail check.
    pub fn check_le(
        &mut self,
        name: &str,
        location: &str,
        lhs: f64,
        rhs: f64,
        tol: f64,
        seed: u64,
        grid: usize,
    ) {
        let ok = lhs <= rhs + tol * rhs.abs();
        self.push(
            name,
            location,
            if ok { Status::Pass } else { Status::Fail },
            lhs,
            rhs,
            tol,
            seed,
            grid,
        );
    }

    /// Adds `|lhs - rhs| <= tol` as a pass/fail check.
    pub fn check_close(
        &mut self,
        name: &str,
        location: &str,
        lhs: f64,
        rhs: f64,
        tol: f64,
        seed: u64,
        grid: usize,
    ) {
        let ok = (lhs - rhs).abs() <= tol;
        self.push(
            name,
            location,
            if ok { Status::Pass } else { Status::Fail },
            lhs,
            rhs,
            tol,
            seed,
            grid,
        );
    }

    pub fn record(
        &mut self,
        name: &str,
        location: &str,
        lhs: f64,
        rhs: f64,
        seed: u64,
        grid: usize,
    ) {
        self.push(
            name,
            location,
            Status::Recorded,
            lhs,
            rhs,
            f64::NAN,
            seed,
            grid,
        );
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        name: &str,
        location: &str,
        status: Status,
        lhs: f64,
        rhs: f64,
        tol: f64,
        seed: u64,
        grid: usize,
    ) {
        self.checks.push(CheckRecord {
            suite: self.suite.clone(),
            name: name.to_string(),
            location: location.to_string(),
            status,
            lhs,
            rhs,
            ratio: ratio(lhs, rhs),
            tolerance: tol,
            seed,
            grid,
        });
    }

    pub fn fail(&mut self, name: &str, location: &str, message: String, seed: u64, grid: usize) {
        self.diagnostics.push(format!("{name}: {message}"));
        self.push(
            name,
            location,
            Status::Fail,
            f64::NAN,
            f64::NAN,
            f64::NAN,
            seed,
            grid,
        );
    }

    /// Records the skip count; more than half the trials skipped fails.
    pub fn close_trials(&mut self, trials: usize, skipped: usize) {
        self.trials += trials;
        self.skipped += skipped;
        if 2 * skipped > trials {
            self.diagnostics.push(format!(
                "{skipped} of {trials} trials skipped (degenerate denominators)"
            ));
            let seed = self.environment.seed;
            self.push(
                "skip-rate",
                "trial bookkeeping",
                Status::Fail,
                skipped as f64,
                trials as f64 / 2.0,
                0.0,
                seed,
                0,
            );
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn stamp(&mut self) {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        self.environment.timestamp = Some(secs.to_string());
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// SHA-256 of the JSON report with the timestamp removed, in hex.
    pub fn determinism_hash(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.environment.timestamp = None;
        let digest = Sha256::digest(copy.to_json()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.checks {
            w.serialize(CsvRow {
                suite: &c.suite,
                check: &c.name,
                location: &c.location,
                status: c.status.as_str(),
                lhs: c.lhs,
                rhs: c.rhs,
                ratio: c.ratio,
                tolerance: c.tolerance,
                seed: c.seed,
                grid: c.grid,
            })
            .map_err(|e| ExperimentError::Input(e.to_string()))?;
        }
        if self.checks.is_empty() {
            w.write_record([
                "suite",
                "check",
                "location",
                "status",
                "lhs",
                "rhs",
                "ratio",
                "tolerance",
                "seed",
                "grid",
            ])
            .map_err(|e| ExperimentError::Input(e.to_string()))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| ExperimentError::Input(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes `<suite>.json` and `<suite>.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let json = dir.join(format!("{}.json", self.suite));
        let csv = dir.join(format!("{}.csv", self.suite));
        fs::write(&json, self.to_json()?)?;
        fs::write(&csv, self.to_csv()?)?;
        Ok((json, csv))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let report: Self = serde_json::from_str(&text)?;
        if report.schema != SCHEMA {
            return Err(ExperimentError::Input(format!(
                "{}: schema {} is not {SCHEMA}",
                path.display(),
                report.schema
            )));
        }
        Ok(report)
    }

    /// Concatenates reports; estimates are keyed by source suite.
    pub fn merge(reports: &[ExperimentReport]) -> Result<Self> {
        let first = reports
            .first()
            .ok_or_else(|| ExperimentError::Input("nothing to merge".into()))?;
        let name = reports
            .iter()
            .map(|r| r.suite.as_str())
            .collect::<Vec<_>>()
            .join("+");
        let mut out = Self::new(&name, first.environment.seed, &first.environment.sizes);
        for r in reports {
            out.checks.extend(r.checks.iter().cloned());
            out.trials += r.trials;
            out.skipped += r.skipped;
            out.diagnostics
                .extend(r.diagnostics.iter().map(|d| format!("{}: {d}", r.suite)));
            let e = &r.estimates;
            for (key, v) in [
                ("c_n_hat", e.c_n_hat),
                ("c_delta_n_hat", e.c_delta_n_hat),
                ("lerner_c_hat", e.lerner_c_hat),
                ("crw_ratio_lo", e.crw_ratio_lo),
                ("crw_ratio_hi", e.crw_ratio_hi),
            ] {
                if let Some(v) = v {
                    out.estimates.extra.insert(format!("{}.{key}", r.suite), v);
                }
            }
            for (k, v) in &e.extra {
                out.estimates.extra.insert(format!("{}.{k}", r.suite), *v);
            }
        }
        Ok(out)
    }
}
