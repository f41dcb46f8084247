//! Output records and atomic file writing.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bayes::Discretization;
use crate::error::{Error, Result};
use crate::mcmc::RatioEstimate;
use crate::mlmcmc::Qoi;

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_slice(&bytes)?)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Config(format!("CSV: {e}"))
}

pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| Error::Config(format!("CSV: {e}")))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_atomic(path, &csv_bytes(rows)?)
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

/// One estimator realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub depth: u32,
    pub replicate: u32,
    pub burn_in: bool,
    pub estimate: f64,
    pub cpu_seconds: f64,
    pub wall_seconds: f64,
    pub acceptance_rate: f64,
    pub evaluations: usize,
}

/// Error summary over the replicates of one depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseRow {
    pub depth: u32,
    pub replicates: usize,
    pub reference: f64,
    pub rmse: f64,
    pub median_abs_error: f64,
    pub mean_cpu_seconds: f64,
    pub total_cpu_seconds: f64,
    pub mean_wall_seconds: f64,
    pub total_wall_seconds: f64,
}

/// Burn-in against no burn-in at one depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub depth: u32,
    pub rmse_without: f64,
    pub rmse_with: f64,
    /// `RMSE(without) / RMSE(with)`.
    pub rmse_ratio: f64,
    pub cpu_without: f64,
    pub cpu_with: f64,
    /// `CPU(with) / CPU(without)`.
    pub cpu_ratio: f64,
}

pub const REFERENCE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRecord {
    pub schema_version: u32,
    pub qoi: Qoi,
    pub level: Discretization,
    pub seed: u64,
    pub result: RatioEstimate,
    pub cpu_seconds: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Groups runs by depth (ascending) and summarizes errors against `reference`.
pub fn summarize(runs: &[RunRecord], reference: f64) -> Vec<RmseRow> {
    let mut depths: Vec<u32> = runs.iter().map(|r| r.depth).collect();
    depths.sort_unstable();
    depths.dedup();
    depths
        .into_iter()
        .map(|depth| {
            let rs: Vec<&RunRecord> = runs.iter().filter(|r| r.depth == depth).collect();
            let n = rs.len() as f64;
            let mse = rs.iter().map(|r| (r.estimate - reference).powi(2)).sum::<f64>() / n;
            let cpu: f64 = rs.iter().map(|r| r.cpu_seconds).sum();
            let wall: f64 = rs.iter().map(|r| r.wall_seconds).sum();
            RmseRow {
                depth,
                replicates: rs.len(),
                reference,
                rmse: mse.sqrt(),
                median_abs_error: median(rs.iter().map(|r| (r.estimate - reference).abs()).collect()),
                mean_cpu_seconds: cpu / n,
                total_cpu_seconds: cpu,
                mean_wall_seconds: wall / n,
                total_wall_seconds: wall,
            }
        })
        .collect()
}

/// Pairs summaries with and without burn-in by depth.
pub fn compare(with: &[RmseRow], without: &[RmseRow]) -> Vec<ReportRow> {
    with.iter()
        .filter_map(|w| {
            let o = without.iter().find(|o| o.depth == w.depth)?;
            Some(ReportRow {
                depth: w.depth,
                rmse_without: o.rmse,
                rmse_with: w.rmse,
                rmse_ratio: o.rmse / w.rmse,
                cpu_without: o.mean_cpu_seconds,
                cpu_with: w.mean_cpu_seconds,
                cpu_ratio: w.mean_cpu_seconds / o.mean_cpu_seconds,
            })
        })
        .collect()
}

/// Least-squares slope of `log(y)` against `log(x)`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return None;
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
