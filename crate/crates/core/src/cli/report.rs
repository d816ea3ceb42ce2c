//! Experiment reports and their CSV form.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mc::BoundVerdict;

/// Configuration echo printed ahead of the rows.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportHeader {
    pub statistic: String,
    pub model: String,
    pub base: String,
    pub n: usize,
    pub sigma: f64,
    pub trials: u64,
    pub seed: u64,
    pub bound: Option<String>,
    pub confidence: f64,
}

impl fmt::Display for ReportHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "statistic={} model={} base={} n={} sigma={} trials={} seed={} bound={} confidence={}",
            self.statistic,
            self.model,
            self.base,
            self.n,
            self.sigma,
            self.trials,
            self.seed,
            self.bound.as_deref().unwrap_or("none"),
            self.confidence
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReportRow {
    pub x: f64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Absent when no bound is compared; such rows pass.
    pub bound: Option<f64>,
    pub pass: bool,
}

impl From<&BoundVerdict> for ReportRow {
    fn from(v: &BoundVerdict) -> Self {
        ReportRow {
            x: v.x,
            p_hat: v.estimate.p_hat,
            ci_low: v.estimate.ci_low,
            ci_high: v.estimate.ci_high,
            bound: Some(v.bound_value),
            pass: v.pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub header: ReportHeader,
    rows: Vec<ReportRow>,
    /// Trials dropped for a degenerate pivot or singular matrix.
    pub failures: u64,
}

impl Report {
    /// Rows are stored sorted by ascending `x`.
    pub fn new(header: ReportHeader, mut rows: Vec<ReportRow>, failures: u64) -> Self {
        rows.sort_by(|a, b| a.x.total_cmp(&b.x));
        Report {
            header,
            rows,
            failures,
        }
    }

    pub fn rows(&self) -> &[ReportRow] {
        &self.rows
    }

    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| !r.pass).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,p_hat,ci_low,ci_high,bound,pass\n");
        for r in &self.rows {
            let bound = r.bound.map(|b| b.to_string()).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.x, r.p_hat, r.ci_low, r.ci_high, bound, r.pass
            ));
        }
        s
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: {}/{} rows pass, {} failed trials",
            if self.pass() { "PASS" } else { "FAIL" },
            self.rows.len() - self.failed_rows(),
            self.rows.len(),
            self.failures
        )
    }
}

pub fn write_report_csv(report: &Report, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, report.to_csv()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
