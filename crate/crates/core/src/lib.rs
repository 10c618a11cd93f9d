//! Quadrature spatial scattering modulation (QSSM) over geometric mmWave channels.
//!
//! The crate covers the whole link: constellation and bit mapping ([`modem`]),
//! Saleh–Valenzuela channel realizations ([`channel`]), the transmit/receive
//! chain with exhaustive ML detection ([`transceiver`]), pairwise-error and
//! union-bound analysis ([`analysis`]) and a reproducible, trial-parallel
//! Monte Carlo engine ([`montecarlo`]).
//!
//! The numerical core is generic over the scalar type through [`Real`]
//! (implemented for `f32` and `f64`). The aliases below fix the scalar to
//! `f64`, which is what the analysis tolerances are written against.

// `!(x > 0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
mod error;
pub mod modem;
pub mod montecarlo;
mod scalar;
pub mod transceiver;

pub use error::{Error, Result};
pub use scalar::Real;

pub use num_complex::Complex;

/// Crate version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Double-precision constellation.
pub type Constellation64 = modem::Constellation<f64>;
/// Single-precision constellation.
pub type Constellation32 = modem::Constellation<f32>;
/// Double-precision QSSM symbol.
pub type QssmSymbol64 = modem::QssmSymbol<f64>;
/// Double-precision symbol book.
pub type SymbolBook64 = modem::SymbolBook<f64>;
/// Single-precision symbol book.
pub type SymbolBook32 = modem::SymbolBook<f32>;
/// Double-precision channel realization.
pub type ChannelRealization64 = channel::ChannelRealization<f64>;
/// Double-precision detection result.
pub type DetectionResult64 = transceiver::DetectionResult<f64>;
/// Complex sample in double precision.
pub type Complex64 = Complex<f64>;
/// Complex sample in single precision.
pub type Complex32 = Complex<f32>;
