//! Trial-parallel Monte Carlo estimation of the bit error rate.
//!
//! Each trial draws a channel (according to the [`RedrawPolicy`]), a uniform
//! label and the noise, runs exhaustive ML detection and counts bit errors
//! over the full label. Trials are independent streams of a counter-based
//! generator and error counts are summed as integers, so the result is the
//! same for any number of worker threads.

mod stats;
mod streams;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{abep_point, db_to_linear, DistanceSpectrum, PepConvention, PepKernel};
use crate::channel::{complex_gaussian, sample_channel, sample_gains, AngleMode, ArrayGeometry};
use crate::modem::{ssm_spectral_efficiency, spectral_efficiency, Constellation, ConstellationKind, SymbolBook};
use crate::transceiver::{
    ml_detect_ideal, ml_detect_physical, qssm_observe_ideal_with_noise, qssm_observe_physical_with_noise,
    ssm_detect_ideal, ssm_observe_ideal_with_noise,
};
use crate::{Error, Real, Result};

pub use stats::{binomial_ci, BerEstimate, Z95};
pub use streams::{Domain, StreamKey};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    #[serde(alias = "QSSM")]
    Qssm,
    #[serde(alias = "SSM")]
    Ssm,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Qssm => "QSSM",
            Scheme::Ssm => "SSM",
        })
    }
}

/// Scalar model with orthogonal beams, or the full array chain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    #[default]
    #[serde(alias = "IDEAL")]
    Ideal,
    #[serde(alias = "PHYSICAL")]
    Physical,
}

/// How often the channel is redrawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RedrawPolicy {
    /// Fresh channel every trial (i.i.d. fast fading).
    #[default]
    PerTrial,
    /// One channel per block of consecutive trials.
    PerBlock(u64),
}

impl RedrawPolicy {
    fn block_size(self) -> u64 {
        match self {
            RedrawPolicy::PerTrial => 1,
            RedrawPolicy::PerBlock(n) => n,
        }
    }
}

/// Everything needed to reproduce one simulated curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Free-form name used for output files and reports.
    pub label: Option<String>,
    pub scheme: Scheme,
    #[serde(rename = "l")]
    pub paths: usize,
    #[serde(rename = "m")]
    pub order: usize,
    pub constellation: ConstellationKind,
    pub channel_mode: ChannelMode,
    pub n_t: usize,
    pub n_r: usize,
    pub spacing: f64,
    pub angle_mode: AngleMode,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub redraw: RedrawPolicy,
    pub convention: PepConvention,
}

pub const DEFAULT_TRIALS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 0x5155_5353_4d00_0001;

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            label: None,
            scheme: Scheme::Qssm,
            paths: 4,
            order: 4,
            constellation: ConstellationKind::Qam,
            channel_mode: ChannelMode::Ideal,
            n_t: 32,
            n_r: 32,
            spacing: 0.5,
            angle_mode: AngleMode::DftGrid,
            snr_db: (0..=12).map(|i| 2.0 * i as f64).collect(),
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            redraw: RedrawPolicy::PerTrial,
            convention: PepConvention::default(),
        }
    }
}

impl SimConfig {
    pub fn tx_geometry(&self) -> ArrayGeometry {
        ArrayGeometry { elements: self.n_t, spacing: self.spacing }
    }

    pub fn rx_geometry(&self) -> ArrayGeometry {
        ArrayGeometry { elements: self.n_r, spacing: self.spacing }
    }

    /// Bits per channel use.
    pub fn spectral_efficiency(&self) -> Result<u32> {
        match self.scheme {
            Scheme::Qssm => spectral_efficiency(self.order, self.paths),
            Scheme::Ssm => ssm_spectral_efficiency(self.order, self.paths),
        }
    }

    /// Display name: the label if set, otherwise a description of the scheme.
    pub fn name(&self) -> String {
        match &self.label {
            Some(l) => l.clone(),
            None => format!(
                "{}_L{}_{}{}",
                self.scheme.to_string().to_lowercase(),
                self.paths,
                self.order,
                self.constellation.to_string().to_lowercase()
            ),
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config is always serializable");
        hex::encode(&Sha256::digest(&json)[..8])
    }

    pub fn validate(&self) -> Result<()> {
        Constellation::<f64>::new(self.constellation, self.order)?;
        self.spectral_efficiency()?;
        if self.trials == 0 {
            return Err(Error::ZeroTrials);
        }
        if self.redraw == RedrawPolicy::PerBlock(0) {
            return Err(Error::param("redraw", "block size must be positive"));
        }
        if self.snr_db.is_empty() {
            return Err(Error::param("snr_db", "SNR grid is empty"));
        }
        if self.snr_db.iter().any(|s| s.is_nan() || *s == f64::INFINITY) {
            return Err(Error::param("snr_db", "SNR values must be finite or -inf"));
        }
        if self.snr_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("snr_db", "SNR points must be strictly increasing"));
        }
        match (self.scheme, self.channel_mode) {
            (Scheme::Ssm, ChannelMode::Physical) => {
                return Err(Error::param("channel_mode", "SSM is only simulated on the ideal model"))
            }
            (Scheme::Qssm, ChannelMode::Physical) => {
                self.tx_geometry().validate()?;
                self.rx_geometry().validate()?;
                for g in [self.tx_geometry(), self.rx_geometry()] {
                    if self.angle_mode == AngleMode::DftGrid && self.paths > g.grid_size() {
                        return Err(Error::InfeasibleAngles {
                            paths: self.paths,
                            elements: g.elements,
                            separation: g.sine_resolution(),
                        });
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Distance spectrum of the configured scheme.
    pub fn spectrum(&self) -> Result<DistanceSpectrum<f64>> {
        match self.scheme {
            Scheme::Qssm => Ok(DistanceSpectrum::qssm(&SymbolBook::build(self.paths, self.constellation, self.order)?)),
            Scheme::Ssm => DistanceSpectrum::ssm(self.paths, &Constellation::new(self.constellation, self.order)?),
        }
    }
}

/// Trials handed to one rayon task; a multiple of the redraw block.
const CHUNK_TRIALS: u64 = 4096;

enum Link<T> {
    Qssm(SymbolBook<T>),
    Ssm(Constellation<T>, usize),
}

/// Simulates `config.trials` trials at `snr_db` (which may be `-inf`).
pub fn run_point<T: Real>(config: &SimConfig, snr_db: f64) -> Result<BerEstimate> {
    config.validate()?;
    if snr_db.is_nan() || snr_db == f64::INFINITY {
        return Err(Error::param("snr_db", format!("{snr_db} dB is not a valid SNR")));
    }
    let snr = T::lit(db_to_linear(snr_db));
    let link = match config.scheme {
        Scheme::Qssm => Link::Qssm(SymbolBook::<T>::build(config.paths, config.constellation, config.order)?),
        Scheme::Ssm => Link::Ssm(Constellation::<T>::new(config.constellation, config.order)?, config.paths),
    };
    let bits = config.spectral_efficiency()?;
    let trial_key = StreamKey::new(config.seed, snr_db, Domain::Trial);
    let channel_key = StreamKey::new(config.seed, snr_db, Domain::Channel);
    let block = config.redraw.block_size();
    let chunk = CHUNK_TRIALS.div_ceil(block) * block;
    let chunks = config.trials.div_ceil(chunk);

    let errors = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * chunk;
            let end = (start + chunk).min(config.trials);
            run_chunk(config, &link, snr, start..end, &trial_key, &channel_key, block)
        })
        .try_reduce(|| 0u64, |a, b| Ok(a + b))?;
    BerEstimate::new(snr_db, config.trials, errors, bits)
}

enum Drawn<T> {
    Gains(Vec<crate::Complex<T>>),
    Array(crate::channel::ChannelRealization<T>),
}

fn run_chunk<T: Real>(
    config: &SimConfig,
    link: &Link<T>,
    snr: T,
    trials: std::ops::Range<u64>,
    trial_key: &StreamKey,
    channel_key: &StreamKey,
    block: u64,
) -> Result<u64> {
    let tx = config.tx_geometry();
    let rx = config.rx_geometry();
    let mut channel: Option<(u64, Drawn<T>)> = None;
    let mut errors = 0u64;
    for t in trials {
        let block_index = t / block;
        if channel.as_ref().map(|(b, _)| *b) != Some(block_index) {
            let mut rng = channel_key.stream(block_index);
            let drawn = match config.channel_mode {
                ChannelMode::Ideal => Drawn::Gains(sample_gains(config.paths, &mut rng)),
                ChannelMode::Physical => {
                    Drawn::Array(sample_channel(config.paths, &tx, &rx, config.angle_mode, &mut rng)?)
                }
            };
            channel = Some((block_index, drawn));
        }
        let drawn = &channel.as_ref().expect("channel drawn above").1;
        let mut rng = trial_key.stream(t);
        let (sent, detected) = match (link, drawn) {
            (Link::Qssm(book), Drawn::Gains(gains)) => {
                let label = rng.random_range(0..book.len());
                let obs = qssm_observe_ideal_with_noise(book.symbol(label), gains, snr, complex_gaussian(&mut rng))?;
                (label, ml_detect_ideal(&obs, gains, book)?.label)
            }
            (Link::Qssm(book), Drawn::Array(ch)) => {
                let label = rng.random_range(0..book.len());
                let noise: Vec<_> = (0..config.n_r).map(|_| complex_gaussian(&mut rng)).collect();
                let obs = qssm_observe_physical_with_noise(book.symbol(label), ch, snr, &noise)?;
                (label, ml_detect_physical(&obs, ch, book)?.label)
            }
            (Link::Ssm(con, paths), Drawn::Gains(gains)) => {
                let signal_bits = con.bits_per_symbol();
                let label = rng.random_range(0..paths * con.order());
                let k = (label >> signal_bits) + 1;
                let x = con.point(label & (con.order() - 1));
                let obs = ssm_observe_ideal_with_noise(k, x, gains, snr, complex_gaussian(&mut rng))?;
                (label, ssm_detect_ideal(&obs, gains, con, *paths)?.label)
            }
            (Link::Ssm(..), Drawn::Array(_)) => unreachable!("rejected by validate"),
        };
        errors += (sent ^ detected).count_ones() as u64;
    }
    Ok(errors)
}

/// One SNR point of a curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub estimate: BerEstimate,
    pub abep_analytic: f64,
    pub abep_asymptotic: f64,
}

/// Simulated and analytical ABEP over an SNR grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbepCurve {
    pub config_hash: String,
    pub points: Vec<CurvePoint>,
}

impl AbepCurve {
    /// `(snr_db, simulated abep)` pairs.
    pub fn simulated(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.estimate.snr_db, p.estimate.abep)).collect()
    }

    /// `(snr_db, union bound)` pairs.
    pub fn analytic(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.estimate.snr_db, p.abep_analytic)).collect()
    }
}

/// [`run_point`] over the configured grid, with both bounds under `config.convention`.
pub fn sweep<T: Real>(config: &SimConfig) -> Result<AbepCurve> {
    config.validate()?;
    let spectrum = config.spectrum()?;
    let points = config
        .snr_db
        .iter()
        .map(|&snr_db| {
            let estimate = run_point::<T>(config, snr_db)?;
            let bound = abep_point(&spectrum, snr_db, config.convention)?;
            Ok(CurvePoint {
                estimate,
                abep_analytic: bound.abep_analytical,
                abep_asymptotic: bound.abep_asymptotic,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AbepCurve { config_hash: config.hash(), points })
}

/// SNR at which `points` first falls to `target`, interpolating `log10(abep)` linearly in dB.
pub fn crossing_snr(points: &[(f64, f64)], target: f64) -> Result<f64> {
    let no_crossing = || Error::NoCrossing { target };
    if !(target > 0.0) {
        return Err(no_crossing());
    }
    for (i, &(snr, p)) in points.iter().enumerate() {
        if p == target {
            return Ok(snr);
        }
        if p > target {
            if let Some(&(snr2, p2)) = points.get(i + 1) {
                if p2 <= target {
                    if p2 <= 0.0 {
                        return Err(no_crossing());
                    }
                    let (l1, l2, lt) = (p.log10(), p2.log10(), target.log10());
                    return Ok(snr + (snr2 - snr) * (l1 - lt) / (l1 - l2));
                }
            }
        }
    }
    Err(no_crossing())
}

/// `crossing(b) − crossing(a)`: positive when `a` reaches `target` at a lower SNR.
pub fn gain_at_level(curve_a: &[(f64, f64)], curve_b: &[(f64, f64)], target: f64) -> Result<f64> {
    Ok(crossing_snr(curve_b, target)? - crossing_snr(curve_a, target)?)
}

/// One row of the convention comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArbiterRow {
    pub snr_db: f64,
    pub abep_sim: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bound_chi_square: f64,
    pub bound_exact_model: f64,
}

/// Which PEP convention bounds the simulated curve tightly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArbiterVerdict {
    pub rows: Vec<ArbiterRow>,
    pub chi_square_qualifies: bool,
    pub exact_model_qualifies: bool,
    /// Set only when exactly one convention qualifies.
    pub winner: Option<PepConvention>,
}

/// Bounds may not exceed the simulation by more than this at the two highest SNRs.
pub const ARBITER_TRACKING_FACTOR: f64 = 2.0;
/// Only points where the bound is at most this are judged.
pub const ARBITER_BOUND_LEVEL: f64 = 1e-2;

/// Compares simulated estimates against both union bounds.
///
/// Points are kept where the larger of the two bounds is at most
/// [`ARBITER_BOUND_LEVEL`]. A convention qualifies when its bound is at or
/// above the simulated ABEP at every kept point and within
/// [`ARBITER_TRACKING_FACTOR`] of it at the two highest kept points.
pub fn arbitrate(spectrum: &DistanceSpectrum<f64>, estimates: &[BerEstimate]) -> Result<ArbiterVerdict> {
    let mut rows = Vec::new();
    for e in estimates {
        let snr = db_to_linear(e.snr_db);
        let chi = spectrum.union_bound(snr, PepKernel::ClosedForm(PepConvention::ChiSquare))?;
        let exact = spectrum.union_bound(snr, PepKernel::ClosedForm(PepConvention::ExactModel))?;
        if chi.max(exact) <= ARBITER_BOUND_LEVEL {
            rows.push(ArbiterRow {
                snr_db: e.snr_db,
                abep_sim: e.abep,
                ci_low: e.ci_low,
                ci_high: e.ci_high,
                bound_chi_square: chi,
                bound_exact_model: exact,
            });
        }
    }
    if rows.len() < 2 {
        return Err(Error::param("estimates", "need at least two points below the bound level"));
    }
    rows.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
    let qualifies = |bound: fn(&ArbiterRow) -> f64| {
        let above = rows.iter().all(|r| bound(r) >= r.abep_sim);
        let tracks = rows[rows.len() - 2..]
            .iter()
            .all(|r| r.abep_sim > 0.0 && bound(r) <= ARBITER_TRACKING_FACTOR * r.abep_sim);
        above && tracks
    };
    let chi = qualifies(|r| r.bound_chi_square);
    let exact = qualifies(|r| r.bound_exact_model);
    let winner = match (chi, exact) {
        (true, false) => Some(PepConvention::ChiSquare),
        (false, true) => Some(PepConvention::ExactModel),
        _ => None,
    };
    Ok(ArbiterVerdict { rows, chi_square_qualifies: chi, exact_model_qualifies: exact, winner })
}
