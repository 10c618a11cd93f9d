//! Transmit superposition, receive beam combining and exhaustive ML detection.
//!
//! Two observation models are provided:
//!
//! * ideal: the scalar `y = √ρ (β_{k1} x_re + j β_{k2} x_im) + n` with one
//!   unit-variance noise sample, which assumes perfectly orthogonal beams;
//! * physical: the full array chain `y = √ρ H s + w` projected onto every
//!   path's receive steering vector, `z_l = a_r(θ_l)^H y`.
//!
//! Noise always has unit variance; `ρ = Ps/N0` scales the signal.

use num_complex::Complex;
use rand::Rng;

use crate::channel::{complex_gaussian, inner, ChannelRealization};
use crate::modem::{index_to_bits, Constellation, QssmSymbol, SymbolBook};
use crate::{Error, Real, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdealObservation<T> {
    pub y: Complex<T>,
    pub snr: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalObservation<T> {
    /// One combiner output per path direction.
    pub z: Vec<Complex<T>>,
    pub snr: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectionResult<T> {
    pub k1_hat: usize,
    pub k2_hat: usize,
    pub x_hat: Complex<T>,
    /// Constellation label of `x_hat`.
    pub point: usize,
    /// Minimized squared distance.
    pub metric: T,
    pub label: usize,
    pub bits: u32,
}

impl<T> DetectionResult<T> {
    pub fn label_bits(&self) -> Vec<u8> {
        index_to_bits(self.label, self.bits)
    }
}

#[inline]
fn hypothesis<T: Real>(amp: T, b1: Complex<T>, b2: Complex<T>, x_re: T, x_im: T) -> Complex<T> {
    // β1 x_re + j β2 x_im
    Complex::new(b1.re * x_re - b2.im * x_im, b1.im * x_re + b2.re * x_im) * amp
}

fn check_snr<T: Real>(snr: T) -> Result<T> {
    if !(snr >= T::zero()) || !snr.is_finite() {
        return Err(Error::param("snr", format!("{snr} is not a finite non-negative SNR")));
    }
    Ok(snr.sqrt())
}

fn check_index(k: usize, paths: usize) -> Result<usize> {
    if k == 0 || k > paths {
        return Err(Error::IndexOutOfRange { index: k, paths });
    }
    Ok(k - 1)
}

/// Noiseless ideal observation `√ρ (β_{k1} x_re + j β_{k2} x_im)`.
pub fn qssm_noiseless<T: Real>(symbol: &QssmSymbol<T>, gains: &[Complex<T>], snr: T) -> Result<Complex<T>> {
    let amp = check_snr(snr)?;
    let k1 = check_index(symbol.k1, gains.len())?;
    let k2 = check_index(symbol.k2, gains.len())?;
    Ok(hypothesis(amp, gains[k1], gains[k2], symbol.x_re, symbol.x_im))
}

/// Ideal observation with an explicit noise sample.
pub fn qssm_observe_ideal_with_noise<T: Real>(
    symbol: &QssmSymbol<T>,
    gains: &[Complex<T>],
    snr: T,
    noise: Complex<T>,
) -> Result<IdealObservation<T>> {
    Ok(IdealObservation { y: qssm_noiseless(symbol, gains, snr)? + noise, snr })
}

pub fn qssm_observe_ideal<T: Real, R: Rng + ?Sized>(
    symbol: &QssmSymbol<T>,
    gains: &[Complex<T>],
    snr: T,
    rng: &mut R,
) -> Result<IdealObservation<T>> {
    let clean = qssm_noiseless(symbol, gains, snr)?;
    Ok(IdealObservation { y: clean + complex_gaussian(rng), snr })
}

/// Transmit vector `a_t(θ_{k1}) x_re + j a_t(θ_{k2}) x_im`.
pub fn qssm_transmit<T: Real>(symbol: &QssmSymbol<T>, channel: &ChannelRealization<T>) -> Result<Vec<Complex<T>>> {
    let k1 = check_index(symbol.k1, channel.paths())?;
    let k2 = check_index(symbol.k2, channel.paths())?;
    let j_im = Complex::new(T::zero(), symbol.x_im);
    Ok(channel
        .tx_steering(k1)
        .iter()
        .zip(channel.tx_steering(k2))
        .map(|(a1, a2)| a1 * symbol.x_re + a2 * j_im)
        .collect())
}

/// Physical observation with explicit per-element receive noise (`N_r` samples).
pub fn qssm_observe_physical_with_noise<T: Real>(
    symbol: &QssmSymbol<T>,
    channel: &ChannelRealization<T>,
    snr: T,
    noise: &[Complex<T>],
) -> Result<PhysicalObservation<T>> {
    let amp = check_snr(snr)?;
    let n_r = channel.rx_geometry().elements;
    if noise.len() != n_r {
        return Err(Error::param("noise", format!("{} samples for {} receive elements", noise.len(), n_r)));
    }
    let s = qssm_transmit(symbol, channel)?;
    let y: Vec<Complex<T>> = channel.apply(&s).into_iter().zip(noise).map(|(v, n)| v * amp + n).collect();
    let z = (0..channel.paths()).map(|l| inner(channel.rx_steering(l), &y)).collect();
    Ok(PhysicalObservation { z, snr })
}

pub fn qssm_observe_physical<T: Real, R: Rng + ?Sized>(
    symbol: &QssmSymbol<T>,
    channel: &ChannelRealization<T>,
    snr: T,
    rng: &mut R,
) -> Result<PhysicalObservation<T>> {
    let noise: Vec<Complex<T>> = (0..channel.rx_geometry().elements).map(|_| complex_gaussian(rng)).collect();
    qssm_observe_physical_with_noise(symbol, channel, snr, &noise)
}

/// Sum of the combiner outputs aimed at the distinct scatterers `{k1, k2}`.
///
/// With orthogonal beams this reproduces the ideal scalar model, except that
/// the noise is the sum of one projection per distinct beam.
pub fn combine_beams<T: Real>(observation: &PhysicalObservation<T>, k1: usize, k2: usize) -> Result<Complex<T>> {
    let l = observation.z.len();
    let a = check_index(k1, l)?;
    let b = check_index(k2, l)?;
    Ok(if a == b { observation.z[a] } else { observation.z[a] + observation.z[b] })
}

/// Exhaustive ML over all `L²M` hypotheses of the scalar model; ties go to the lowest label.
pub fn ml_detect_ideal<T: Real>(
    observation: &IdealObservation<T>,
    gains: &[Complex<T>],
    book: &SymbolBook<T>,
) -> Result<DetectionResult<T>> {
    if book.is_empty() {
        return Err(Error::NotInBook);
    }
    if gains.len() != book.paths() {
        return Err(Error::param("gains", format!("{} gains for a book with L = {}", gains.len(), book.paths())));
    }
    let amp = check_snr(observation.snr)?;
    let y = observation.y;
    let mut best = 0usize;
    let mut best_metric = T::infinity();
    for s in book.symbols() {
        let d = y - hypothesis(amp, gains[s.k1 - 1], gains[s.k2 - 1], s.x_re, s.x_im);
        let m = d.norm_sqr();
        if m < best_metric {
            best_metric = m;
            best = s.label;
        }
    }
    Ok(result(book.symbol(best), best_metric))
}

/// Joint ML over the `L` combiner outputs; ties go to the lowest label.
pub fn ml_detect_physical<T: Real>(
    observation: &PhysicalObservation<T>,
    channel: &ChannelRealization<T>,
    book: &SymbolBook<T>,
) -> Result<DetectionResult<T>> {
    let l = book.paths();
    if observation.z.len() != l || channel.paths() != l {
        return Err(Error::param(
            "observation",
            format!("{} beams and {} paths for a book with L = {l}", observation.z.len(), channel.paths()),
        ));
    }
    let amp = check_snr(observation.snr)?;
    let gains = channel.gains();
    let zero = Complex::new(T::zero(), T::zero());
    let mut best = 0usize;
    let mut best_metric = T::infinity();
    for s in book.symbols() {
        let (k1, k2) = (s.k1 - 1, s.k2 - 1);
        let mut m = T::zero();
        for (i, (z, beta)) in observation.z.iter().zip(gains).enumerate() {
            let re = if i == k1 { s.x_re } else { T::zero() };
            let im = if i == k2 { s.x_im } else { T::zero() };
            let expected = if i == k1 || i == k2 { hypothesis(amp, *beta, *beta, re, im) } else { zero };
            m = m + (z - expected).norm_sqr();
        }
        if m < best_metric {
            best_metric = m;
            best = s.label;
        }
    }
    Ok(result(book.symbol(best), best_metric))
}

fn result<T: Real>(s: &QssmSymbol<T>, metric: T) -> DetectionResult<T> {
    DetectionResult {
        k1_hat: s.k1,
        k2_hat: s.k2,
        x_hat: s.x(),
        point: s.point,
        metric,
        label: s.label,
        bits: s.bits,
    }
}

/// SSM observation `√ρ β_k x + n` for 1-based scatterer `k`.
pub fn ssm_observe_ideal_with_noise<T: Real>(
    k: usize,
    x: Complex<T>,
    gains: &[Complex<T>],
    snr: T,
    noise: Complex<T>,
) -> Result<IdealObservation<T>> {
    let amp = check_snr(snr)?;
    let k = check_index(k, gains.len())?;
    Ok(IdealObservation { y: gains[k] * amp * x + noise, snr })
}

pub fn ssm_observe_ideal<T: Real, R: Rng + ?Sized>(
    k: usize,
    x: Complex<T>,
    gains: &[Complex<T>],
    snr: T,
    rng: &mut R,
) -> Result<IdealObservation<T>> {
    ssm_observe_ideal_with_noise(k, x, gains, snr, T::zero().into()).map(|mut o| {
        o.y = o.y + complex_gaussian(rng);
        o
    })
}

/// Exhaustive ML over `L·M` SSM hypotheses labelled `[k bits | signal bits]`.
pub fn ssm_detect_ideal<T: Real>(
    observation: &IdealObservation<T>,
    gains: &[Complex<T>],
    constellation: &Constellation<T>,
    paths: usize,
) -> Result<DetectionResult<T>> {
    let path_bits = crate::modem::log2_exact(paths, "scatterer count")?;
    if gains.len() != paths {
        return Err(Error::param("gains", format!("{} gains for L = {paths}", gains.len())));
    }
    let amp = check_snr(observation.snr)?;
    let m = constellation.order();
    let signal_bits = constellation.bits_per_symbol();
    let mut best = (0usize, 0usize);
    let mut best_metric = T::infinity();
    for (k, beta) in gains.iter().enumerate() {
        let scaled = beta * amp;
        for (p, x) in constellation.points().iter().enumerate() {
            let metric = (observation.y - scaled * x).norm_sqr();
            if metric < best_metric {
                best_metric = metric;
                best = (k, p);
            }
        }
    }
    let (k, p) = best;
    debug_assert!(p < m);
    Ok(DetectionResult {
        k1_hat: k + 1,
        k2_hat: k + 1,
        x_hat: constellation.point(p),
        point: p,
        metric: best_metric,
        label: (k << signal_bits) | p,
        bits: path_bits + signal_bits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel, AngleMode, ArrayGeometry};
    use crate::modem::ConstellationKind;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn hand_evaluated_observation() {
        let book = SymbolBook::<f64>::build(2, ConstellationKind::Qam, 4).unwrap();
        let label = book.label_of(1, 2, 0b11).unwrap();
        let obs = qssm_observe_ideal_with_noise(book.symbol(label), &[c(1.0, 0.0), c(0.0, 1.0)], 1.0, c(0.0, 0.0))
            .unwrap();
        // 1·(1/√2) + j·j·(1/√2) = 0
        assert_abs_diff_eq!(obs.y.norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_quadrature_part_is_ssm() {
        let gains = [c(0.3, -1.2), c(0.5, 0.5)];
        let s = QssmSymbol { k1: 2, k2: 2, x_re: 0.8, x_im: 0.0, point: 0, label: 0, bits: 0 };
        let q = qssm_noiseless(&s, &gains, 4.0).unwrap();
        let ssm = ssm_observe_ideal_with_noise(2, c(0.8, 0.0), &gains, 4.0, c(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!((q - ssm.y).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn seeded_observation_is_reproducible() {
        let book = SymbolBook::<f64>::build(4, ConstellationKind::Qam, 4).unwrap();
        let gains = [c(1.0, 0.0), c(0.2, 0.1), c(-0.4, 0.9), c(0.0, -1.0)];
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            qssm_observe_ideal(book.symbol(27), &gains, 10.0, &mut rng).unwrap()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn out_of_range_index() {
        let s = QssmSymbol { k1: 3, k2: 1, x_re: 1.0, x_im: 0.0, point: 0, label: 0, bits: 0 };
        assert_eq!(qssm_noiseless(&s, &[c(1.0, 0.0); 2], 1.0), Err(Error::IndexOutOfRange { index: 3, paths: 2 }));
        assert!(qssm_noiseless(&s, &[c(1.0, 0.0); 4], -1.0).is_err());
    }

    #[test]
    fn zero_snr_picks_lowest_label() {
        let book = SymbolBook::<f64>::build(4, ConstellationKind::Qam, 4).unwrap();
        let gains = [c(1.0, 0.0), c(0.2, 0.1), c(-0.4, 0.9), c(0.0, -1.0)];
        let obs = IdealObservation { y: c(0.7, -2.0), snr: 0.0 };
        let d = ml_detect_ideal(&obs, &gains, &book).unwrap();
        assert_eq!(d.label, 0);
        assert_eq!((d.k1_hat, d.k2_hat), (1, 1));
    }

    #[test]
    fn eight_hypothesis_brute_force() {
        let book = SymbolBook::<f64>::build(2, ConstellationKind::Psk, 2).unwrap();
        let gains = [c(1.0, 0.0), c(2.0, 0.0)];
        let obs = IdealObservation { y: c(1.9, 0.0), snr: 1.0 };
        let d = ml_detect_ideal(&obs, &gains, &book).unwrap();

        // independent enumeration over (k1, k2, x) with x ∈ {+1, -1}
        let mut best = (f64::INFINITY, 0usize);
        for k1 in 0..2 {
            for k2 in 0..2 {
                for (p, x) in [(0usize, 1.0f64), (1, -1.0)] {
                    let v = gains[k1] * x; // BPSK has no imaginary part
                    let m = (obs.y - v).norm_sqr();
                    let label = (k1 << 2) | (k2 << 1) | p;
                    if m < best.0 - 1e-15 {
                        best = (m, label);
                    }
                }
            }
        }
        assert_eq!(d.label, best.1);
        assert_eq!(d.k1_hat, 2);
        assert_eq!(d.x_hat, c(1.0, 0.0));
        assert_abs_diff_eq!(d.metric, 0.01, epsilon = 1e-12);
    }

    #[test]
    fn noiseless_roundtrip_ideal() {
        let book = SymbolBook::<f64>::build(4, ConstellationKind::Qam, 16).unwrap();
        let gains = [c(1.1, 0.2), c(-0.3, 0.8), c(0.5, -0.9), c(-1.4, -0.1)];
        for s in book.symbols() {
            let obs = qssm_observe_ideal_with_noise(s, &gains, 100.0, c(0.0, 0.0)).unwrap();
            let d = ml_detect_ideal(&obs, &gains, &book).unwrap();
            assert_eq!(d.label, s.label);
            assert_eq!(d.metric, 0.0);
        }
    }

    #[test]
    fn noiseless_roundtrip_physical() {
        let g = ArrayGeometry::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ch = sample_channel::<f64, _>(4, &g, &g, AngleMode::DftGrid, &mut rng).unwrap();
        let book = SymbolBook::<f64>::build(4, ConstellationKind::Qam, 4).unwrap();
        let zeros = vec![c(0.0, 0.0); 32];
        for s in book.symbols() {
            let obs = qssm_observe_physical_with_noise(s, &ch, 10.0, &zeros).unwrap();
            let d = ml_detect_physical(&obs, &ch, &book).unwrap();
            assert_eq!(d.label, s.label);
            assert!(d.metric < 1e-18);
        }
    }

    #[test]
    fn physical_noiseless_beam_outputs() {
        let g = ArrayGeometry::default();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let ch = sample_channel::<f64, _>(4, &g, &g, AngleMode::DftGrid, &mut rng).unwrap();
        let book = SymbolBook::<f64>::build(4, ConstellationKind::Qam, 4).unwrap();
        let s = book.symbol(book.label_of(2, 4, 0b10).unwrap());
        let zeros = vec![c(0.0, 0.0); 32];
        let rho = 9.0;
        let obs = qssm_observe_physical_with_noise(s, &ch, rho, &zeros).unwrap();
        let b = ch.gains();
        assert_abs_diff_eq!((obs.z[1] - b[1] * s.x_re * 3.0).norm(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!((obs.z[3] - c(0.0, 1.0) * b[3] * s.x_im * 3.0).norm(), 0.0, epsilon = 1e-9);
        assert!(obs.z[0].norm() < 1e-9 && obs.z[2].norm() < 1e-9);

        let same = book.symbol(book.label_of(3, 3, 0b01).unwrap());
        let obs = qssm_observe_physical_with_noise(same, &ch, rho, &zeros).unwrap();
        assert_abs_diff_eq!((obs.z[2] - b[2] * same.x() * 3.0).norm(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn global_phase_invariance() {
        let book = SymbolBook::<f64>::build(4, ConstellationKind::Qam, 4).unwrap();
        let gains = [c(1.1, 0.2), c(-0.3, 0.8), c(0.5, -0.9), c(-1.4, -0.1)];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rot = Complex::from_polar(1.0, 0.77);
        for label in 0..64 {
            let obs = qssm_observe_ideal(book.symbol(label), &gains, 3.0, &mut rng).unwrap();
            let rotated_gains: Vec<_> = gains.iter().map(|g| g * rot).collect();
            let rotated = IdealObservation { y: obs.y * rot, snr: obs.snr };
            let a = ml_detect_ideal(&obs, &gains, &book).unwrap();
            let b = ml_detect_ideal(&rotated, &rotated_gains, &book).unwrap();
            assert_eq!(a.label, b.label);
        }
    }

    #[test]
    fn duplicated_angles_still_detect() {
        let g = ArrayGeometry::default();
        let gains = vec![c(1.0, 0.0), c(0.0, 1.0)];
        let ch = ChannelRealization::new(gains, vec![0.5, 0.5], vec![1.0, 1.0], g, g).unwrap();
        let book = SymbolBook::<f64>::build(2, ConstellationKind::Qam, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let obs = qssm_observe_physical(book.symbol(9), &ch, 10.0, &mut rng).unwrap();
        let d = ml_detect_physical(&obs, &ch, &book).unwrap();
        assert!(d.label < book.len());
        assert!(d.metric.is_finite());
    }

    #[test]
    fn ssm_roundtrip_and_bpsk_degenerate() {
        let con = Constellation::<f64>::new(ConstellationKind::Qam, 4).unwrap();
        let gains = [c(0.4, 1.0), c(-0.7, 0.3)];
        for s in crate::modem::ssm_symbols(2, &con) {
            let obs = ssm_observe_ideal_with_noise(s.k, s.x, &gains, 50.0, c(0.0, 0.0)).unwrap();
            let d = ssm_detect_ideal(&obs, &gains, &con, 2).unwrap();
            assert_eq!(d.label, s.label);
            assert_eq!(d.metric, 0.0);
        }

        // L = 1: coherent BPSK over a single fading gain
        let bpsk = Constellation::<f64>::new(ConstellationKind::Psk, 2).unwrap();
        let beta = [c(0.6, -0.8)];
        let obs = IdealObservation { y: beta[0] * -1.0 + c(0.1, 0.05), snr: 1.0 };
        let d = ssm_detect_ideal(&obs, &beta, &bpsk, 1).unwrap();
        assert_eq!((d.label, d.bits), (1, 1));
    }

    #[test]
    fn combined_beams_reproduce_scalar_model() {
        let g = ArrayGeometry::default();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let book = SymbolBook::<f64>::build(4, ConstellationKind::Qam, 4).unwrap();
        for trial in 0..64 {
            let ch = sample_channel::<f64, _>(4, &g, &g, AngleMode::DftGrid, &mut rng).unwrap();
            let noise: Vec<Complex<f64>> = (0..32).map(|_| complex_gaussian(&mut rng)).collect();
            let s = book.symbol(trial);
            let phys = qssm_observe_physical_with_noise(s, &ch, 20.0, &noise).unwrap();
            let proj = |l: usize| inner(ch.rx_steering(l), &noise);
            let shared = if s.k1 == s.k2 { proj(s.k1 - 1) } else { proj(s.k1 - 1) + proj(s.k2 - 1) };
            let ideal = qssm_observe_ideal_with_noise(s, ch.gains(), 20.0, shared).unwrap();
            let combined = combine_beams(&phys, s.k1, s.k2).unwrap();
            assert_abs_diff_eq!((combined - ideal.y).norm(), 0.0, epsilon = 1e-9);
        }
    }
}
