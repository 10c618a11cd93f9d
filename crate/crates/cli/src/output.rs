//! CSV encoding and atomic file writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use qssm::montecarlo::{AbepCurve, CurvePoint};

use crate::error::{CliError, Result};

/// Column order of every per-config curve file.
pub const CURVE_HEADER: [&str; 8] =
    ["snr_db", "abep_sim", "ci_low", "ci_high", "abep_analytic", "abep_asymptotic", "trials", "bit_errors"];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// One line of a curve file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub snr_db: f64,
    pub abep_sim: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub abep_analytic: f64,
    pub abep_asymptotic: f64,
    pub trials: u64,
    pub bit_errors: u64,
}

impl From<&CurvePoint> for CurveRow {
    fn from(p: &CurvePoint) -> Self {
        CurveRow {
            snr_db: p.estimate.snr_db,
            abep_sim: p.estimate.abep,
            ci_low: p.estimate.ci_low,
            ci_high: p.estimate.ci_high,
            abep_analytic: p.abep_analytic,
            abep_asymptotic: p.abep_asymptotic,
            trials: p.estimate.trials,
            bit_errors: p.estimate.bit_errors,
        }
    }
}

pub fn curve_rows(curve: &AbepCurve) -> Vec<CurveRow> {
    curve.points.iter().map(CurveRow::from).collect()
}

/// Serializes `rows` under `header`; every cell is already a string.
pub fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    w.into_inner().expect("flushing to memory")
}

pub fn curve_csv(rows: &[CurveRow]) -> Vec<u8> {
    csv_bytes(
        &CURVE_HEADER,
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.snr_db),
                fmt_f64(r.abep_sim),
                fmt_f64(r.ci_low),
                fmt_f64(r.ci_high),
                fmt_f64(r.abep_analytic),
                fmt_f64(r.abep_asymptotic),
                r.trials.to_string(),
                r.bit_errors.to_string(),
            ]
        }),
    )
}

/// Reads a curve file written by [`curve_csv`].
pub fn read_curve_csv(path: &Path) -> Result<Vec<CurveRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(CURVE_HEADER) {
        return Err(CliError::Config(format!(
            "{}: expected header `{}`, found `{}`",
            path.display(),
            CURVE_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    reader
        .deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| CliError::Config(format!("{} line {}: {e}", path.display(), i + 2)))
        })
        .collect()
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            _ => unreachable!("checked is_io_error"),
        }
    } else {
        CliError::Config(format!("{}: {e}", path.display()))
    }
}

/// Writes `bytes` to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Keeps file names portable: anything outside `[A-Za-z0-9._-]` becomes `_`.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect()
}
