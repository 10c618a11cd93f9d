//! Runs an experiment and writes its artifacts.

use std::path::{Path, PathBuf};

use serde::Serialize;

use qssm::montecarlo::{sweep, SimConfig};

use crate::config::{Comparison, ExperimentSpec};
use crate::error::Result;
use crate::output::{csv_bytes, curve_csv, curve_rows, file_stem, fmt_f64, fmt_opt, write_atomic, CurveRow};
use crate::report::{compare_csv, compare_report, compare_text, crossing_band};

/// Everything needed to reproduce a run. Re-running it yields identical files.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub library_version: &'a str,
    pub seed: u64,
    pub config_hashes: Vec<String>,
    pub levels: &'a [f64],
    pub comparisons: &'a [Comparison],
    pub configs: &'a [SimConfig],
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CROSSINGS_FILE: &str = "crossings.csv";

/// Files written by [`run_experiment`] plus the human-readable summary.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub text: String,
    /// First comparison whose level was not crossed; every file is still written.
    pub comparison_error: Option<qssm::Error>,
}

pub fn manifest_json(spec: &ExperimentSpec) -> String {
    let manifest = Manifest {
        library_version: qssm::VERSION,
        seed: spec.seed,
        config_hashes: spec.configs.iter().map(SimConfig::hash).collect(),
        levels: &spec.levels,
        comparisons: &spec.comparisons,
        configs: &spec.configs,
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest is serializable");
    json.push('\n');
    json
}

pub fn curve_path(dir: &Path, config: &SimConfig) -> PathBuf {
    dir.join(format!("{}.csv", file_stem(&config.name())))
}

/// Sweeps every config, then writes curves, crossings, comparisons and the manifest into `dir`.
pub fn run_experiment(spec: &ExperimentSpec, dir: &Path) -> Result<RunSummary> {
    spec.validate()?;
    let mut summary = RunSummary::default();
    let mut curves: Vec<Vec<CurveRow>> = Vec::new();
    for config in &spec.configs {
        let curve = sweep::<f64>(config)?;
        let rows = curve_rows(&curve);
        let path = curve_path(dir, config);
        write_atomic(&path, &curve_csv(&rows))?;
        summary.text.push_str(&format!(
            "{} ({} b/s/Hz, hash {}): {} points -> {}\n",
            config.name(),
            config.spectral_efficiency()?,
            curve.config_hash,
            rows.len(),
            path.display()
        ));
        summary.files.push(path);
        curves.push(rows);
    }

    // crossing SNR per config and level, with the gap to the first config
    let mut lines = Vec::new();
    for (config, rows) in spec.configs.iter().zip(&curves) {
        for &level in &spec.levels {
            let own = crossing_band(rows, level).ok();
            let reference = crossing_band(&curves[0], level).ok();
            let gap = own.zip(reference).map(|(c, r)| c.db - r.db);
            lines.push(vec![
                config.name(),
                fmt_f64(level),
                fmt_opt(own.map(|c| c.db)),
                fmt_opt(own.and_then(|c| c.low)),
                fmt_opt(own.and_then(|c| c.high)),
                fmt_opt(gap),
            ]);
            if let (Some(c), Some(g)) = (own, gap) {
                summary.text.push_str(&format!(
                    "  {} reaches {level:.0e} at {:.2} dB ({g:+.2} dB vs {})\n",
                    config.name(),
                    c.db,
                    spec.configs[0].name()
                ));
            }
        }
    }
    let path = dir.join(CROSSINGS_FILE);
    write_atomic(
        &path,
        &csv_bytes(&["config", "level", "crossing_db", "crossing_low_db", "crossing_high_db", "gap_db"], lines),
    )?;
    summary.files.push(path);

    for pair in &spec.comparisons {
        let index = |name: &str| spec.configs.iter().position(|c| c.name() == name).expect("validated");
        let (a, b) = (&curves[index(&pair.a)], &curves[index(&pair.b)]);
        match compare_report(a, b, &spec.levels) {
            Ok(rows) => {
                let path = dir.join(format!("compare_{}__{}.csv", file_stem(&pair.a), file_stem(&pair.b)));
                write_atomic(&path, &compare_csv(&rows))?;
                summary.text.push_str(&compare_text(&pair.a, &pair.b, &rows));
                summary.files.push(path);
            }
            Err(e) => {
                summary.text.push_str(&format!("comparison {} vs {}: {e}\n", pair.a, pair.b));
                summary.comparison_error.get_or_insert(e);
            }
        }
    }

    let path = dir.join(MANIFEST_FILE);
    write_atomic(&path, manifest_json(spec).as_bytes())?;
    summary.files.push(path);
    Ok(summary)
}
