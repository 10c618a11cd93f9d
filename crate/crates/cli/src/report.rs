//! Comparison, crossing and analysis-validation reports.

use std::fmt::Write as _;

use serde::Serialize;

use qssm::analysis::{pep_asymptotic_with, pep_closed_form, pep_quadrature, PepConvention};
use qssm::modem::{index_to_bits, ConstellationKind, SymbolBook};
use qssm::montecarlo::{arbitrate, crossing_snr, gain_at_level, sweep, ArbiterVerdict, Scheme, SimConfig};

use crate::error::Result;
use crate::output::{csv_bytes, fmt_f64, fmt_opt, CurveRow};

/// SNR where a curve reaches a level, with the band spanned by its CI curves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Crossing {
    pub db: f64,
    /// Crossing of the lower CI curve (the earliest plausible crossing).
    pub low: Option<f64>,
    /// Crossing of the upper CI curve.
    pub high: Option<f64>,
}

fn column(rows: &[CurveRow], f: impl Fn(&CurveRow) -> f64) -> Vec<(f64, f64)> {
    rows.iter().map(|r| (r.snr_db, f(r))).collect()
}

pub fn crossing_band(rows: &[CurveRow], level: f64) -> qssm::Result<Crossing> {
    Ok(Crossing {
        db: crossing_snr(&column(rows, |r| r.abep_sim), level)?,
        low: crossing_snr(&column(rows, |r| r.ci_low), level).ok(),
        high: crossing_snr(&column(rows, |r| r.ci_high), level).ok(),
    })
}

/// Gain of curve `a` over curve `b` at one level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GainRow {
    pub level: f64,
    pub a: Crossing,
    pub b: Crossing,
    pub gain_db: f64,
    pub gain_low_db: Option<f64>,
    pub gain_high_db: Option<f64>,
}

/// Per-level SNR gains `crossing(b) − crossing(a)` with CI-derived bands.
pub fn compare_report(a: &[CurveRow], b: &[CurveRow], levels: &[f64]) -> qssm::Result<Vec<GainRow>> {
    levels
        .iter()
        .map(|&level| {
            let gain_db = gain_at_level(&column(a, |r| r.abep_sim), &column(b, |r| r.abep_sim), level)?;
            let (ca, cb) = (crossing_band(a, level)?, crossing_band(b, level)?);
            Ok(GainRow {
                level,
                a: ca,
                b: cb,
                gain_db,
                gain_low_db: cb.low.zip(ca.high).map(|(bl, ah)| bl - ah),
                gain_high_db: cb.high.zip(ca.low).map(|(bh, al)| bh - al),
            })
        })
        .collect()
}

pub const COMPARE_HEADER: [&str; 10] = [
    "level",
    "crossing_a_db",
    "crossing_a_low_db",
    "crossing_a_high_db",
    "crossing_b_db",
    "crossing_b_low_db",
    "crossing_b_high_db",
    "gain_db",
    "gain_low_db",
    "gain_high_db",
];

pub fn compare_csv(rows: &[GainRow]) -> Vec<u8> {
    csv_bytes(
        &COMPARE_HEADER,
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.level),
                fmt_f64(r.a.db),
                fmt_opt(r.a.low),
                fmt_opt(r.a.high),
                fmt_f64(r.b.db),
                fmt_opt(r.b.low),
                fmt_opt(r.b.high),
                fmt_f64(r.gain_db),
                fmt_opt(r.gain_low_db),
                fmt_opt(r.gain_high_db),
            ]
        }),
    )
}

fn band(low: Option<f64>, high: Option<f64>) -> String {
    match (low, high) {
        (Some(l), Some(h)) => format!("[{l:.2}, {h:.2}]"),
        _ => "[n/a]".to_string(),
    }
}

pub fn compare_text(name_a: &str, name_b: &str, rows: &[GainRow]) -> String {
    let mut out = format!("gain of {name_a} over {name_b}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "  ABEP {:.0e}: {name_a} {:.2} dB {}, {name_b} {:.2} dB {}, gain {:.2} dB {}",
            r.level,
            r.a.db,
            band(r.a.low, r.a.high),
            r.b.db,
            band(r.b.low, r.b.high),
            r.gain_db,
            band(r.gain_low_db, r.gain_high_db)
        );
    }
    out
}

/// `label,k1,k2,x_re,x_im` rows of a QSSM symbol book; the label is the bit string.
pub fn table_csv(paths: usize, kind: ConstellationKind, order: usize) -> Result<Vec<u8>> {
    let book = SymbolBook::<f64>::build(paths, kind, order)?;
    let bits = book.bits_per_symbol();
    Ok(csv_bytes(
        &["label", "k1", "k2", "x_re", "x_im"],
        book.symbols().iter().map(|s| {
            vec![
                index_to_bits(s.label, bits).iter().map(|b| char::from(b'0' + b)).collect(),
                s.k1.to_string(),
                s.k2.to_string(),
                fmt_f64(s.x_re),
                fmt_f64(s.x_im),
            ]
        }),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymptoticRow {
    pub rho_eta: f64,
    pub chi_square_ratio: f64,
    pub exact_model_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedVerdict {
    pub seed: u64,
    pub verdict: ArbiterVerdict,
}

/// Closed-form accuracy, asymptotic ratios and the convention arbiter.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub closed_form_max_rel_error: f64,
    pub closed_form_grid: Vec<f64>,
    pub asymptotic: Vec<AsymptoticRow>,
    pub arbiter_snr_db: Vec<f64>,
    pub arbiter_trials: u64,
    pub arbiter: Vec<SeedVerdict>,
    /// All seeds reached the same single winner.
    pub verdict_stable: bool,
    pub verdict: Option<PepConvention>,
}

/// `ρη̄` from 1e-3 to 1e4 at four points per decade.
pub fn standard_grid() -> Vec<f64> {
    (-12..=16).map(|i| 10f64.powf(i as f64 / 4.0)).collect()
}

pub const ARBITER_SEEDS: [u64; 3] = [0x0a11_ce01, 0x0a11_ce02, 0x0a11_ce03];

/// Arbiter setup: QSSM, L = 4, 4QAM, ideal beams.
pub fn arbiter_config(seed: u64, trials: u64) -> SimConfig {
    SimConfig {
        label: Some("arbiter".into()),
        scheme: Scheme::Qssm,
        paths: 4,
        order: 4,
        constellation: ConstellationKind::Qam,
        snr_db: (12..=22).map(|i| 2.0 * i as f64).collect(),
        trials,
        seed,
        ..SimConfig::default()
    }
}

pub fn validate_analysis(seeds: &[u64], trials: u64) -> Result<ValidationReport> {
    let grid = standard_grid();
    let mut worst: f64 = 0.0;
    for c in PepConvention::ALL {
        for &a in &grid {
            let q = pep_quadrature(a, 1.0, c)?;
            worst = worst.max(((pep_closed_form(a, 1.0, c) - q) / q).abs());
        }
    }
    let asymptotic = [1e2, 1e3, 1e4, 1e5, 1e6]
        .into_iter()
        .map(|a| {
            let ratio = |c| Ok::<_, qssm::Error>(pep_asymptotic_with(a, 1.0, c)? / pep_closed_form(a, 1.0, c));
            Ok(AsymptoticRow {
                rho_eta: a,
                chi_square_ratio: ratio(PepConvention::ChiSquare)?,
                exact_model_ratio: ratio(PepConvention::ExactModel)?,
            })
        })
        .collect::<qssm::Result<Vec<_>>>()?;

    let mut arbiter = Vec::new();
    for &seed in seeds {
        let config = arbiter_config(seed, trials);
        let curve = sweep::<f64>(&config)?;
        let estimates: Vec<_> = curve.points.into_iter().map(|p| p.estimate).collect();
        arbiter.push(SeedVerdict { seed, verdict: arbitrate(&config.spectrum()?, &estimates)? });
    }
    let first = arbiter.first().and_then(|s| s.verdict.winner);
    let verdict_stable = first.is_some() && arbiter.iter().all(|s| s.verdict.winner == first);
    Ok(ValidationReport {
        closed_form_max_rel_error: worst,
        closed_form_grid: grid,
        asymptotic,
        arbiter_snr_db: arbiter_config(0, 1).snr_db,
        arbiter_trials: trials,
        arbiter,
        verdict_stable,
        verdict: if verdict_stable { first } else { None },
    })
}

pub fn validation_text(r: &ValidationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "closed form vs quadrature: max relative error {:.3e} over {} points in [1e-3, 1e4]",
        r.closed_form_max_rel_error,
        r.closed_form_grid.len()
    );
    let _ = writeln!(out, "asymptotic / closed form (13/12 = {:.6}):", 13.0 / 12.0);
    for a in &r.asymptotic {
        let _ = writeln!(
            out,
            "  rho*eta {:>8.0e}: chi_square {:.6}, exact_model {:.6}",
            a.rho_eta, a.chi_square_ratio, a.exact_model_ratio
        );
    }
    let _ = writeln!(out, "convention arbiter ({} trials per point):", r.arbiter_trials);
    for s in &r.arbiter {
        let v = &s.verdict;
        let _ = writeln!(
            out,
            "  seed {:#x}: chi_square {}, exact_model {}, winner {}",
            s.seed,
            qualifies(v.chi_square_qualifies),
            qualifies(v.exact_model_qualifies),
            v.winner.map_or("none".to_string(), |c| c.to_string())
        );
    }
    let _ = writeln!(
        out,
        "verdict: {} ({})",
        r.verdict.map_or("none".to_string(), |c| c.to_string()),
        if r.verdict_stable { "stable across seeds" } else { "not stable" }
    );
    out
}

fn qualifies(b: bool) -> &'static str {
    if b {
        "qualifies"
    } else {
        "fails"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(points: &[(f64, f64)]) -> Vec<CurveRow> {
        points
            .iter()
            .map(|&(snr_db, p)| CurveRow {
                snr_db,
                abep_sim: p,
                ci_low: p * 0.9,
                ci_high: p * 1.1,
                abep_analytic: p,
                abep_asymptotic: p,
                trials: 1,
                bit_errors: 0,
            })
            .collect()
    }

    #[test]
    fn shifted_curve_gains() {
        let a: Vec<(f64, f64)> = (0..30).map(|i| (i as f64, 10f64.powf(-0.2 * i as f64))).collect();
        let b: Vec<(f64, f64)> = a.iter().map(|&(s, p)| (s + 3.0, p)).collect();
        let report = compare_report(&rows(&a), &rows(&b), &[1e-2, 1e-3]).unwrap();
        for r in &report {
            assert!((r.gain_db - 3.0).abs() < 1e-9);
            let (lo, hi) = (r.gain_low_db.unwrap(), r.gain_high_db.unwrap());
            assert!(lo < 3.0 && 3.0 < hi);
        }
        let same = compare_report(&rows(&a), &rows(&a), &[1e-3]).unwrap();
        assert_eq!(same[0].gain_db, 0.0);
        assert!(compare_report(&rows(&a), &rows(&b), &[1e-9]).is_err());
    }

    #[test]
    fn table_has_one_row_per_symbol() {
        let csv = String::from_utf8(table_csv(4, ConstellationKind::Qam, 4).unwrap()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "label,k1,k2,x_re,x_im");
        assert_eq!(lines.len(), 65);
        assert!(lines[1].starts_with("000000,1,1,-7.07"));
        assert!(lines[64].starts_with("111111,4,4,7.07"));
    }
}
