//! Geometric Saleh–Valenzuela channel with uniform linear arrays.
//!
//! `H = Σ_l β_l a_r(θ_l^r) a_t(θ_l^t)^H` with `L` scatterers, i.i.d.
//! `β_l ~ CN(0, 1)`, and unit-norm steering vectors
//! `a(θ)[n] = exp(j 2π (d/λ) sin θ · n) / √N`.

use ndarray::Array2;
use num_complex::Complex;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

/// Uniform linear array: element count and spacing in wavelengths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub elements: usize,
    pub spacing: f64,
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        ArrayGeometry { elements: 32, spacing: 0.5 }
    }
}

impl ArrayGeometry {
    pub fn new(elements: usize, spacing: f64) -> Result<Self> {
        let g = ArrayGeometry { elements, spacing };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.elements == 0 {
            return Err(Error::param("elements", "array needs at least one element"));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::param("spacing", format!("{} is not a positive spacing", self.spacing)));
        }
        Ok(())
    }

    /// Null-to-null beam width in the sine domain, `1 / (N d/λ)`.
    pub fn sine_resolution(&self) -> f64 {
        1.0 / (self.elements as f64 * self.spacing)
    }

    /// Number of mutually orthogonal beam directions on the sine grid.
    pub fn grid_size(&self) -> usize {
        let n = (2.0 * self.elements as f64 * self.spacing + 1e-9).floor() as usize;
        n.clamp(1, self.elements)
    }

    pub fn response<T: Real>(&self, theta: T) -> Vec<Complex<T>> {
        array_response(self, theta)
    }
}

/// Steering vector of `geometry` toward `theta` (radians).
pub fn array_response<T: Real>(geometry: &ArrayGeometry, theta: T) -> Vec<Complex<T>> {
    let n = geometry.elements;
    let scale = T::count(n).sqrt().recip();
    let step = T::TAU() * T::lit(geometry.spacing) * theta.sin();
    (0..n)
        .map(|i| Complex::from_polar(scale, step * T::count(i)))
        .collect()
}

/// `a^H b`.
#[inline]
pub fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

/// Circularly symmetric complex Gaussian with unit variance.
#[inline]
pub fn complex_gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex::new(T::lit(re * s), T::lit(im * s))
}

/// How path angles are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleMode {
    /// Distinct directions on the orthogonal sine grid; beams are exactly orthogonal.
    #[default]
    #[serde(alias = "DFT_GRID")]
    DftGrid,
    /// Uniform angles, resampled until sines are at least one beam width apart.
    #[serde(alias = "MIN_SEP", alias = "min_sep")]
    MinSeparation,
}

/// One draw of the channel: gains, angles and the arrays they refer to.
#[derive(Clone, Debug)]
pub struct ChannelRealization<T> {
    gains: Vec<Complex<T>>,
    aod: Vec<T>,
    aoa: Vec<T>,
    tx: ArrayGeometry,
    rx: ArrayGeometry,
    tx_steering: Vec<Vec<Complex<T>>>,
    rx_steering: Vec<Vec<Complex<T>>>,
}

impl<T: Real> ChannelRealization<T> {
    pub fn new(
        gains: Vec<Complex<T>>,
        aod: Vec<T>,
        aoa: Vec<T>,
        tx: ArrayGeometry,
        rx: ArrayGeometry,
    ) -> Result<Self> {
        tx.validate()?;
        rx.validate()?;
        if gains.is_empty() {
            return Err(Error::param("gains", "at least one path is required"));
        }
        if aod.len() != gains.len() || aoa.len() != gains.len() {
            return Err(Error::param(
                "angles",
                format!("{} gains but {} AoDs and {} AoAs", gains.len(), aod.len(), aoa.len()),
            ));
        }
        if aod.iter().chain(&aoa).any(|a| !a.is_finite()) {
            return Err(Error::param("angles", "angles must be finite"));
        }
        let wrap = |a: T| {
            let r = a % T::TAU();
            if r < T::zero() { r + T::TAU() } else { r }
        };
        let aod: Vec<T> = aod.into_iter().map(wrap).collect();
        let aoa: Vec<T> = aoa.into_iter().map(wrap).collect();
        let tx_steering = aod.iter().map(|&a| array_response(&tx, a)).collect();
        let rx_steering = aoa.iter().map(|&a| array_response(&rx, a)).collect();
        Ok(ChannelRealization { gains, aod, aoa, tx, rx, tx_steering, rx_steering })
    }

    pub fn paths(&self) -> usize {
        self.gains.len()
    }

    pub fn gains(&self) -> &[Complex<T>] {
        &self.gains
    }

    pub fn aod(&self) -> &[T] {
        &self.aod
    }

    pub fn aoa(&self) -> &[T] {
        &self.aoa
    }

    pub fn tx_geometry(&self) -> &ArrayGeometry {
        &self.tx
    }

    pub fn rx_geometry(&self) -> &ArrayGeometry {
        &self.rx
    }

    /// `a_t(θ_l^t)` for path `l` (0-based).
    pub fn tx_steering(&self, l: usize) -> &[Complex<T>] {
        &self.tx_steering[l]
    }

    /// `a_r(θ_l^r)` for path `l` (0-based).
    pub fn rx_steering(&self, l: usize) -> &[Complex<T>] {
        &self.rx_steering[l]
    }

    /// Dense `N_r × N_t` channel matrix.
    pub fn channel_matrix(&self) -> Array2<Complex<T>> {
        let mut h = Array2::from_elem((self.rx.elements, self.tx.elements), Complex::new(T::zero(), T::zero()));
        for (l, beta) in self.gains.iter().enumerate() {
            let (ar, at) = (&self.rx_steering[l], &self.tx_steering[l]);
            for (r, ar_r) in ar.iter().enumerate() {
                let w = beta * ar_r;
                for (c, at_c) in at.iter().enumerate() {
                    h[(r, c)] = h[(r, c)] + w * at_c.conj();
                }
            }
        }
        h
    }

    /// `H s` evaluated through the rank-one path decomposition.
    pub fn apply(&self, s: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.rx.elements];
        for (l, beta) in self.gains.iter().enumerate() {
            let w = beta * inner(&self.tx_steering[l], s);
            for (o, a) in out.iter_mut().zip(&self.rx_steering[l]) {
                *o = *o + w * a;
            }
        }
        out
    }

    /// `a_r(θ_l)^H H a_t(θ_l)`, which equals `β_l` for orthogonal beams.
    pub fn effective_gain(&self, l: usize) -> Complex<T> {
        inner(&self.rx_steering[l], &self.apply(&self.tx_steering[l]))
    }

    /// Largest cross-correlation `|a^H(θ_l) a(θ_l')|`, `l ≠ l'`, over both arrays.
    pub fn orthogonality_defect(&self) -> Result<T> {
        orthogonality_defect(self)
    }

    pub fn to_record(&self) -> ChannelRecord {
        ChannelRecord {
            gains: self.gains.iter().map(|g| [g.re.to_f64_lossy(), g.im.to_f64_lossy()]).collect(),
            aod: self.aod.iter().map(|a| a.to_f64_lossy()).collect(),
            aoa: self.aoa.iter().map(|a| a.to_f64_lossy()).collect(),
            tx: self.tx,
            rx: self.rx,
        }
    }

    pub fn from_record(record: &ChannelRecord) -> Result<Self> {
        Self::new(
            record.gains.iter().map(|[re, im]| Complex::new(T::lit(*re), T::lit(*im))).collect(),
            record.aod.iter().map(|&a| T::lit(a)).collect(),
            record.aoa.iter().map(|&a| T::lit(a)).collect(),
            record.tx,
            record.rx,
        )
    }
}

/// JSON form of a realization: gains as `[re, im]`, angles in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub gains: Vec<[f64; 2]>,
    pub aod: Vec<f64>,
    pub aoa: Vec<f64>,
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
}

pub fn orthogonality_defect<T: Real>(channel: &ChannelRealization<T>) -> Result<T> {
    let l = channel.paths();
    if l < 2 {
        return Err(Error::Domain(format!("orthogonality defect needs at least two paths, got {l}")));
    }
    let mut worst = T::zero();
    for steering in [&channel.tx_steering, &channel.rx_steering] {
        for i in 0..l {
            for j in (i + 1)..l {
                worst = worst.max(inner(&steering[i], &steering[j]).norm());
            }
        }
    }
    Ok(worst.min(T::one()))
}

/// i.i.d. `CN(0, 1)` path gains.
pub fn sample_gains<T: Real, R: Rng + ?Sized>(paths: usize, rng: &mut R) -> Vec<Complex<T>> {
    (0..paths).map(|_| complex_gaussian(rng)).collect()
}

fn grid_angles<R: Rng + ?Sized>(paths: usize, geometry: &ArrayGeometry, rng: &mut R) -> Result<Vec<f64>> {
    let size = geometry.grid_size();
    if paths > size {
        return Err(Error::InfeasibleAngles {
            paths,
            elements: geometry.elements,
            separation: geometry.sine_resolution(),
        });
    }
    let step = geometry.sine_resolution();
    Ok(sample(rng, size, paths)
        .into_iter()
        .map(|m| {
            let u = (-1.0 + m as f64 * step).clamp(-1.0, 1.0);
            let base = u.asin();
            // either branch of the arcsine has the same sine
            let theta = if rng.random_bool(0.5) { base } else { std::f64::consts::PI - base };
            theta.rem_euclid(std::f64::consts::TAU)
        })
        .collect())
}

const MAX_REJECTIONS: usize = 10_000;

fn separated_angles<R: Rng + ?Sized>(paths: usize, geometry: &ArrayGeometry, rng: &mut R) -> Result<Vec<f64>> {
    let sep = geometry.sine_resolution();
    let infeasible = Error::InfeasibleAngles { paths, elements: geometry.elements, separation: sep };
    if paths > geometry.elements || (paths.saturating_sub(1)) as f64 * sep > 2.0 {
        return Err(infeasible);
    }
    let mut angles: Vec<f64> = Vec::with_capacity(paths);
    let mut sines: Vec<f64> = Vec::with_capacity(paths);
    for _ in 0..paths {
        let mut placed = false;
        for _ in 0..MAX_REJECTIONS {
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            let s = theta.sin();
            if sines.iter().all(|&o| (o - s).abs() >= sep) {
                angles.push(theta);
                sines.push(s);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(infeasible);
        }
    }
    Ok(angles)
}

fn sample_angles<R: Rng + ?Sized>(
    paths: usize,
    geometry: &ArrayGeometry,
    mode: AngleMode,
    rng: &mut R,
) -> Result<Vec<f64>> {
    match mode {
        AngleMode::DftGrid => grid_angles(paths, geometry, rng),
        AngleMode::MinSeparation => separated_angles(paths, geometry, rng),
    }
}

/// Draws gains, then AoDs, then AoAs from `rng`.
pub fn sample_channel<T: Real, R: Rng + ?Sized>(
    paths: usize,
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    mode: AngleMode,
    rng: &mut R,
) -> Result<ChannelRealization<T>> {
    if paths == 0 {
        return Err(Error::param("paths", "at least one path is required"));
    }
    tx.validate()?;
    rx.validate()?;
    let gains = sample_gains(paths, rng);
    let aod = sample_angles(paths, tx, mode, rng)?;
    let aoa = sample_angles(paths, rx, mode, rng)?;
    ChannelRealization::new(
        gains,
        aod.into_iter().map(T::lit).collect(),
        aoa.into_iter().map(T::lit).collect(),
        *tx,
        *rx,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn norm(v: &[Complex<f64>]) -> f64 {
        v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn broadside_response() {
        let a = array_response::<f64>(&ArrayGeometry { elements: 4, spacing: 0.5 }, 0.0);
        for x in &a {
            assert_abs_diff_eq!(x.re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(x.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn response_is_unit_norm() {
        let g = ArrayGeometry::default();
        for theta in [0.0, 0.3, 1.2, 2.9, 4.4, 6.1] {
            assert_abs_diff_eq!(norm(&array_response(&g, theta)), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn grid_directions_are_orthogonal() {
        let g = ArrayGeometry::default();
        let a = array_response::<f64>(&g, (1.0f64 / 16.0).asin());
        let b = array_response::<f64>(&g, (3.0f64 / 16.0).asin());
        let expected = Complex::from_polar(1.0 / 32f64.sqrt(), std::f64::consts::PI * 5.0 / 16.0);
        assert_abs_diff_eq!(a[5].re, expected.re, epsilon = 1e-14);
        assert_abs_diff_eq!(a[5].im, expected.im, epsilon = 1e-14);
        // direct summation of the geometric series
        let direct: Complex<f64> = (0..32)
            .map(|n| Complex::from_polar(1.0 / 32.0, std::f64::consts::PI * n as f64 * (3.0 - 1.0) / 16.0))
            .sum();
        assert!(direct.norm() < 1e-12);
        assert!(inner(&a, &b).norm() < 1e-12);
    }

    #[test]
    fn seeded_sampling_is_deterministic() {
        let g = ArrayGeometry::default();
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            sample_channel::<f64, _>(4, &g, &g, AngleMode::MinSeparation, &mut rng).unwrap().to_record()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn min_separation_holds() {
        let g = ArrayGeometry::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let ch = sample_channel::<f64, _>(4, &g, &g, AngleMode::MinSeparation, &mut rng).unwrap();
            for angles in [ch.aod(), ch.aoa()] {
                for i in 0..4 {
                    assert!((0.0..std::f64::consts::TAU).contains(&angles[i]));
                    for j in (i + 1)..4 {
                        assert!((angles[i].sin() - angles[j].sin()).abs() >= 1.0 / 16.0 - 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn infeasible_separation() {
        let g = ArrayGeometry { elements: 4, spacing: 0.5 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for mode in [AngleMode::DftGrid, AngleMode::MinSeparation] {
            let err = sample_channel::<f64, _>(8, &g, &g, mode, &mut rng).unwrap_err();
            assert!(matches!(err, Error::InfeasibleAngles { paths: 8, elements: 4, .. }));
        }
    }

    #[test]
    fn grid_defect_is_zero() {
        let g = ArrayGeometry::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let ch = sample_channel::<f64, _>(8, &g, &g, AngleMode::DftGrid, &mut rng).unwrap();
            assert!(ch.orthogonality_defect().unwrap() < 1e-10);
        }
    }

    #[test]
    fn duplicated_angle_defect_is_one() {
        let g = ArrayGeometry::default();
        let one = Complex::new(1.0, 0.0);
        let ch = ChannelRealization::new(vec![one, one], vec![0.4, 0.4], vec![0.1, 0.9], g, g).unwrap();
        assert_abs_diff_eq!(ch.orthogonality_defect().unwrap(), 1.0, epsilon = 1e-12);
        let single = ChannelRealization::new(vec![one], vec![0.4], vec![0.1], g, g).unwrap();
        assert!(matches!(single.orthogonality_defect(), Err(Error::Domain(_))));
    }

    #[test]
    fn rank_one_matrix() {
        let tx = ArrayGeometry { elements: 8, spacing: 0.5 };
        let rx = ArrayGeometry { elements: 4, spacing: 0.5 };
        let ch = ChannelRealization::new(vec![Complex::new(1.0, 0.0)], vec![0.0], vec![0.0], tx, rx).unwrap();
        let h = ch.channel_matrix();
        assert_eq!(h.dim(), (4, 8));
        for v in h.iter() {
            assert_abs_diff_eq!(v.re, 1.0 / 32f64.sqrt(), epsilon = 1e-15);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn apply_matches_dense_product() {
        let g = ArrayGeometry { elements: 16, spacing: 0.5 };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ch = sample_channel::<f64, _>(3, &g, &g, AngleMode::MinSeparation, &mut rng).unwrap();
        let s: Vec<Complex<f64>> = (0..16).map(|_| complex_gaussian(&mut rng)).collect();
        let h = ch.channel_matrix();
        let fast = ch.apply(&s);
        for r in 0..16 {
            let dense: Complex<f64> = (0..16).map(|c| h[(r, c)] * s[c]).sum();
            assert_abs_diff_eq!((dense - fast[r]).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn effective_gains_on_grid() {
        let g = ArrayGeometry::default();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let ch = sample_channel::<f64, _>(4, &g, &g, AngleMode::DftGrid, &mut rng).unwrap();
        for l in 0..4 {
            assert_abs_diff_eq!((ch.effective_gain(l) - ch.gains()[l]).norm(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn record_roundtrip() {
        let g = ArrayGeometry::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ch = sample_channel::<f64, _>(4, &g, &g, AngleMode::DftGrid, &mut rng).unwrap();
        let json = serde_json::to_string(&ch.to_record()).unwrap();
        let back: ChannelRecord = serde_json::from_str(&json).unwrap();
        let replay = ChannelRealization::<f64>::from_record(&back).unwrap();
        assert_eq!(replay.gains(), ch.gains());
        assert_eq!(replay.aod(), ch.aod());
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let g = ArrayGeometry::default();
        let err = ChannelRealization::<f64>::new(vec![Complex::new(1.0, 0.0)], vec![0.1, 0.2], vec![0.3], g, g);
        assert!(err.is_err());
        assert!(ArrayGeometry::new(0, 0.5).is_err());
        assert!(ArrayGeometry::new(4, -1.0).is_err());
    }
}
