//! Constellations, QSSM bit mapping and label arithmetic.
//!
//! A QSSM label is laid out as `[k1 bits | k2 bits | signal bits]`, most
//! significant bit first. Scatterer indices use natural binary (`00 -> 1#`,
//! `01 -> 2#`, ...). Signal bits follow the constellation's own labeling:
//!
//! * PSK: Gray code around the circle, first point at angle zero.
//! * QAM: rectangular grid with independent Gray labels per dimension, real
//!   bits first. Odd bit counts give the real axis the extra bit, so 8QAM is
//!   `{±1, ±3}/√6` on the real axis times `{±1}/√6` on the imaginary axis.
//!
//! All constellations are scaled to unit average energy.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

/// Largest supported modulation order.
pub const MAX_ORDER: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstellationKind {
    #[serde(alias = "PSK")]
    Psk,
    #[serde(alias = "QAM")]
    Qam,
}

impl std::fmt::Display for ConstellationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstellationKind::Psk => f.write_str("PSK"),
            ConstellationKind::Qam => f.write_str("QAM"),
        }
    }
}

/// `M` points indexed by their bit label.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation<T> {
    kind: ConstellationKind,
    points: Vec<Complex<T>>,
    bits: u32,
}

#[inline]
fn gray(n: usize) -> usize {
    n ^ (n >> 1)
}

pub(crate) fn log2_exact(value: usize, what: &'static str) -> Result<u32> {
    if value == 0 || !value.is_power_of_two() {
        return Err(Error::NotPowerOfTwo { what, value });
    }
    Ok(value.trailing_zeros())
}

impl<T: Real> Constellation<T> {
    pub fn new(kind: ConstellationKind, order: usize) -> Result<Self> {
        if !(2..=MAX_ORDER).contains(&order) || !order.is_power_of_two() {
            return Err(Error::InvalidOrder(order));
        }
        let bits = order.trailing_zeros();
        let points = match kind {
            ConstellationKind::Psk => psk_points(order),
            ConstellationKind::Qam => {
                if order < 4 {
                    return Err(Error::QamTooSmall(order));
                }
                qam_points(bits)
            }
        };
        Ok(Constellation { kind, points, bits })
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits
    }

    /// Points in label order: `points()[label]`.
    pub fn points(&self) -> &[Complex<T>] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex<T> {
        self.points[label]
    }

    pub fn average_energy(&self) -> T {
        let sum: T = self.points.iter().map(|p| p.norm_sqr()).sum();
        sum / T::count(self.points.len())
    }

    /// Label of the point matching `x` to within a small tolerance.
    pub fn find(&self, x: Complex<T>) -> Option<usize> {
        let tol = T::lit(1e-9).max(T::epsilon().sqrt());
        self.points
            .iter()
            .position(|p| (p - x).norm_sqr() <= tol * tol)
    }
}

fn psk_points<T: Real>(order: usize) -> Vec<Complex<T>> {
    let mut points = vec![Complex::new(T::zero(), T::zero()); order];
    for i in 0..order {
        let angle = T::TAU() * T::count(i) / T::count(order);
        // points on an axis get an exact zero component
        let snap = |v: T| if v.abs() < T::lit(1e-12) { T::zero() } else { v };
        points[gray(i)] = Complex::new(snap(angle.cos()), snap(angle.sin()));
    }
    points
}

fn qam_points<T: Real>(bits: u32) -> Vec<Complex<T>> {
    let re_bits = bits.div_ceil(2);
    let im_bits = bits / 2;
    let (n_re, n_im) = (1usize << re_bits, 1usize << im_bits);
    let energy = ((n_re * n_re - 1) + (n_im * n_im - 1)) as f64 / 3.0;
    let scale = T::lit(energy.sqrt().recip());
    let level = |index: usize, count: usize| T::lit((2 * index) as f64 - count as f64 + 1.0) * scale;

    let mut points = vec![Complex::new(T::zero(), T::zero()); 1 << bits];
    for a in 0..n_re {
        for b in 0..n_im {
            let label = (gray(a) << im_bits) | gray(b);
            points[label] = Complex::new(level(a, n_re), level(b, n_im));
        }
    }
    points
}

/// `log2(M) + 2 log2(L)` bits per channel use.
pub fn spectral_efficiency(order: usize, paths: usize) -> Result<u32> {
    Ok(log2_exact(order, "modulation order")? + 2 * log2_exact(paths, "scatterer count")?)
}

/// Rate of the single-beam SSM baseline: `log2(M) + log2(L)`.
pub fn ssm_spectral_efficiency(order: usize, paths: usize) -> Result<u32> {
    Ok(log2_exact(order, "modulation order")? + log2_exact(paths, "scatterer count")?)
}

/// One QSSM transmit decision. Scatterer indices are 1-based.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QssmSymbol<T> {
    /// Scatterer hit by the quadrature beam (carries `x_re`).
    pub k1: usize,
    /// Scatterer hit by the in-phase beam (carries `x_im`).
    pub k2: usize,
    pub x_re: T,
    pub x_im: T,
    /// Constellation label of `x_re + j x_im`.
    pub point: usize,
    /// Full label as an integer, `bits` wide.
    pub label: usize,
    pub bits: u32,
}

impl<T: Real> QssmSymbol<T> {
    pub fn x(&self) -> Complex<T> {
        Complex::new(self.x_re, self.x_im)
    }

    pub fn label_bits(&self) -> Vec<u8> {
        index_to_bits(self.label, self.bits)
    }
}

/// Single-beam SSM symbol for the baseline chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SsmSymbol<T> {
    pub k: usize,
    pub x: Complex<T>,
    pub point: usize,
    pub label: usize,
}

/// Every QSSM symbol for a given scatterer count and constellation, in label order.
#[derive(Clone, Debug)]
pub struct SymbolBook<T> {
    paths: usize,
    path_bits: u32,
    constellation: Constellation<T>,
    symbols: Vec<QssmSymbol<T>>,
}

impl<T: Real> SymbolBook<T> {
    pub fn new(paths: usize, constellation: Constellation<T>) -> Result<Self> {
        let path_bits = log2_exact(paths, "scatterer count")?;
        let signal_bits = constellation.bits_per_symbol();
        let bits = 2 * path_bits + signal_bits;
        if bits > 24 {
            return Err(Error::param("paths", format!("{bits}-bit labels are too large to enumerate")));
        }
        let count = 1usize << bits;
        let symbols = (0..count)
            .map(|label| {
                let point = label & ((1 << signal_bits) - 1);
                let k2 = (label >> signal_bits) & (paths - 1);
                let k1 = label >> (signal_bits + path_bits);
                let x = constellation.point(point);
                QssmSymbol { k1: k1 + 1, k2: k2 + 1, x_re: x.re, x_im: x.im, point, label, bits }
            })
            .collect();
        Ok(SymbolBook { paths, path_bits, constellation, symbols })
    }

    pub fn build(paths: usize, kind: ConstellationKind, order: usize) -> Result<Self> {
        Self::new(paths, Constellation::new(kind, order)?)
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn constellation(&self) -> &Constellation<T> {
        &self.constellation
    }

    pub fn bits_per_symbol(&self) -> u32 {
        2 * self.path_bits + self.constellation.bits_per_symbol()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[QssmSymbol<T>] {
        &self.symbols
    }

    pub fn symbol(&self, label: usize) -> &QssmSymbol<T> {
        &self.symbols[label]
    }

    /// Label of `(k1, k2, point)` with 1-based scatterer indices.
    pub fn label_of(&self, k1: usize, k2: usize, point: usize) -> Result<usize> {
        for k in [k1, k2] {
            if k == 0 || k > self.paths {
                return Err(Error::IndexOutOfRange { index: k, paths: self.paths });
            }
        }
        if point >= self.constellation.order() {
            return Err(Error::NotInBook);
        }
        let signal_bits = self.constellation.bits_per_symbol();
        Ok((((k1 - 1) << self.path_bits | (k2 - 1)) << signal_bits) | point)
    }

    pub fn map_bits(&self, bits: &[u8]) -> Result<&QssmSymbol<T>> {
        let label = bits_to_index(bits, self.bits_per_symbol())?;
        Ok(&self.symbols[label])
    }

    pub fn demap_symbol(&self, symbol: &QssmSymbol<T>) -> Result<Vec<u8>> {
        let point = self
            .constellation
            .find(Complex::new(symbol.x_re, symbol.x_im))
            .ok_or(Error::NotInBook)?;
        let label = self.label_of(symbol.k1, symbol.k2, point).map_err(|_| Error::NotInBook)?;
        Ok(index_to_bits(label, self.bits_per_symbol()))
    }

    /// The SSM symbol set over the same scatterers and constellation, labelled `[k bits | signal bits]`.
    pub fn ssm_symbols(&self) -> Vec<SsmSymbol<T>> {
        ssm_symbols(self.paths, &self.constellation)
    }
}

pub fn ssm_symbols<T: Real>(paths: usize, constellation: &Constellation<T>) -> Vec<SsmSymbol<T>> {
    let signal_bits = constellation.bits_per_symbol();
    (0..paths * constellation.order())
        .map(|label| {
            let point = label & ((1 << signal_bits) - 1);
            SsmSymbol { k: (label >> signal_bits) + 1, x: constellation.point(point), point, label }
        })
        .collect()
}

/// Parses an MSB-first bit string of exactly `width` bits.
pub fn bits_to_index(bits: &[u8], width: u32) -> Result<usize> {
    if bits.len() != width as usize {
        return Err(Error::LabelLength { expected: width as usize, got: bits.len() });
    }
    bits.iter().try_fold(0usize, |acc, &b| match b {
        0 | 1 => Ok((acc << 1) | b as usize),
        _ => Err(Error::param("bits", format!("bit value {b} is not 0 or 1"))),
    })
}

pub fn index_to_bits(index: usize, width: u32) -> Vec<u8> {
    (0..width).rev().map(|i| ((index >> i) & 1) as u8).collect()
}

/// Number of differing positions between two equal-length labels.
pub fn hamming_distance(a: &[u8], b: &[u8]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::LabelLength { expected: a.len(), got: b.len() });
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count())
}

#[inline]
pub fn label_distance(a: usize, b: usize) -> u32 {
    (a ^ b).count_ones()
}
