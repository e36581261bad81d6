use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::vem::Method;

/// Fixed leading CSV columns; `case` and `ratio` follow them.
pub const CSV_COLUMNS: [&str; 13] = [
    "method",
    "k",
    "h",
    "dofs",
    "err_l2",
    "err_grad",
    "order_l2",
    "order_grad",
    "lam_max",
    "lam_min_nz",
    "n_zero",
    "cond",
    "seconds",
];

/// One solve or one matrix analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub k: usize,
    pub h: f64,
    pub dofs: usize,
    pub err_l2: Option<f64>,
    pub err_grad: Option<f64>,
    /// Order against the previous record of the same series.
    pub order_l2: Option<f64>,
    pub order_grad: Option<f64>,
    pub lam_max: Option<f64>,
    pub lam_min_nz: Option<f64>,
    pub n_zero: Option<usize>,
    pub cond: Option<f64>,
    pub seconds: f64,
    /// Mesh or cell label within the experiment.
    pub case: String,
    /// Time relative to the fastest method on the same case (timing only).
    pub ratio: Option<f64>,
}

impl RunRecord {
    pub fn new(method: Method, k: usize, case: impl Into<String>) -> Self {
        Self {
            method,
            k,
            h: 0.0,
            dofs: 0,
            err_l2: None,
            err_grad: None,
            order_l2: None,
            order_grad: None,
            lam_max: None,
            lam_min_nz: None,
            n_zero: None,
            cond: None,
            seconds: 0.0,
            case: case.into(),
            ratio: None,
        }
    }
}

/// Least-squares slope of `log e` against `log h` over all levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub method: Method,
    pub k: usize,
    pub order_l2: Option<f64>,
    pub order_grad: Option<f64>,
    pub levels: usize,
}

/// Settings that determine the numbers in a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    /// `"2k+4"` or the fixed override.
    pub quad_exactness: String,
    pub zero_threshold: f64,
    pub nullspace_rtol: f64,
    pub dof_basis: String,
    pub subtriangulation: String,
    pub solver: String,
    pub cg_tolerance: f64,
    pub dense_threshold: usize,
    pub parallel: bool,
    pub threads: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub environment: Environment,
    pub records: Vec<RunRecord>,
    pub fits: Vec<RateFit>,
    pub notes: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    /// Header plus one row per record. Floats use the shortest
    /// representation that round-trips.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<&str> = CSV_COLUMNS.iter().copied().chain(["case", "ratio"]).collect();
        let mut rows = vec![header.iter().map(|s| s.to_string()).collect::<Vec<_>>()];
        for r in &self.records {
            rows.push(vec![
                r.method.to_string(),
                r.k.to_string(),
                r.h.to_string(),
                r.dofs.to_string(),
                opt(r.err_l2),
                opt(r.err_grad),
                opt(r.order_l2),
                opt(r.order_grad),
                opt(r.lam_max),
                opt(r.lam_min_nz),
                opt(r.n_zero),
                opt(r.cond),
                r.seconds.to_string(),
                r.case.clone(),
                opt(r.ratio),
            ]);
        }
        for row in rows {
            w.write_record(&row).expect("writing to memory cannot fail");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV fields are UTF-8")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Write `<experiment>.csv` and/or `<experiment>.json` into `dir`, creating
/// it if needed. Returns the written paths.
pub fn write_report(report: &ExperimentReport, dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for &format in formats {
        let (ext, body) = match format {
            ReportFormat::Csv => ("csv", report.to_csv()),
            ReportFormat::Json => ("json", report.to_json()?),
        };
        let path = dir.join(format!("{}.{ext}", report.experiment));
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

/// Order between consecutive levels: `log(e_c / e_f) / log(h_c / h_f)`.
pub(super) fn pair_order(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> Option<f64> {
    let v = (e_coarse / e_fine).ln() / (h_coarse / h_fine).ln();
    (e_coarse > 0.0 && e_fine > 0.0 && v.is_finite()).then_some(v)
}

/// Least-squares slope of `log e` against `log h`.
pub(super) fn fitted_order(h: &[f64], e: &[f64]) -> Option<f64> {
    if h.len() < 2 || h.len() != e.len() || e.iter().any(|&x| !(x > 0.0)) {
        return None;
    }
    let n = h.len() as f64;
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let v = sxy / sxx;
    v.is_finite().then_some(v)
}
