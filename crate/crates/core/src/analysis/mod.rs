//! Pairwise error probabilities and union-bound ABEP.
//!
//! For a transmitted hypothesis `(k1, k2, x)` and a competitor
//! `(k̂1, k̂2, x̂)` the conditional PEP is `Q(√(ρη/2))` where
//! `√η = (β_{k1} x_re − β_{k̂1} x̂_re) + j(β_{k2} x_im − β_{k̂2} x̂_im)`.
//! Averaging over the gains needs the distribution of `η`; two conventions
//! are provided (see [`PepConvention`]).

// published coefficient tables are kept digit for digit
#[allow(clippy::excessive_precision)]
pub mod quadrature;
#[allow(clippy::excessive_precision)]
pub mod special;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::modem::{label_distance, Constellation, SymbolBook};
use crate::{Error, Real, Result};

pub use quadrature::{integrate, integrate_semi_infinite, Quadrature};
pub use special::{erfc, q_function};

/// Which scatterer indices a competing hypothesis shares with the transmitted one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EtaCase {
    SameSame,
    DiffSame,
    SameDiff,
    DiffDiff,
}

/// Effective squared distance `E|√η|²` of a hypothesis pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtaBar<T> {
    pub value: T,
    pub case: EtaCase,
}

/// How the fading average of `Q(√(ρη/2))` is normalised.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PepConvention {
    /// `γ = η/η̄` chi-square with two degrees of freedom (density `½ e^{-γ/2}`, mean 2), giving
    /// `½(1 − √(1/(1 + 2/(ρη̄))))`.
    #[serde(alias = "CHI_SQUARE")]
    ChiSquare,
    /// `η` exponential with mean `η̄`, which is what `β ~ CN(0,1)` implies:
    /// `½(1 − √(1/(1 + 4/(ρη̄))))`. Matches simulation; the default.
    #[default]
    #[serde(alias = "EXACT_MODEL")]
    ExactModel,
}

impl PepConvention {
    pub const ALL: [PepConvention; 2] = [PepConvention::ChiSquare, PepConvention::ExactModel];

    /// Mean of the normalised fading variable `γ`.
    fn gamma_mean(self) -> f64 {
        match self {
            PepConvention::ChiSquare => 2.0,
            PepConvention::ExactModel => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PepConvention::ChiSquare => "chi_square",
            PepConvention::ExactModel => "exact_model",
        }
    }
}

impl std::fmt::Display for PepConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PepConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "chi_square" | "chisquare" => Ok(PepConvention::ChiSquare),
            "exact_model" | "exact" => Ok(PepConvention::ExactModel),
            other => Err(Error::param("convention", format!("unknown convention `{other}`"))),
        }
    }
}

/// PEP used inside the union bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PepKernel {
    ClosedForm(PepConvention),
    Asymptotic(PepConvention),
}

impl PepKernel {
    pub fn evaluate<T: Real>(self, snr: T, eta: T) -> Result<T> {
        match self {
            PepKernel::ClosedForm(c) => Ok(pep_closed_form(snr, eta, c)),
            PepKernel::Asymptotic(c) => pep_asymptotic_with(snr, eta, c),
        }
    }
}

pub fn eta_bar<T: Real>(x: Complex<T>, x_hat: Complex<T>, same_k1: bool, same_k2: bool) -> EtaBar<T> {
    let re = if same_k1 { (x.re - x_hat.re).powi(2) } else { x.re.powi(2) + x_hat.re.powi(2) };
    let im = if same_k2 { (x.im - x_hat.im).powi(2) } else { x.im.powi(2) + x_hat.im.powi(2) };
    let case = match (same_k1, same_k2) {
        (true, true) => EtaCase::SameSame,
        (false, true) => EtaCase::DiffSame,
        (true, false) => EtaCase::SameDiff,
        (false, false) => EtaCase::DiffDiff,
    };
    EtaBar { value: re + im, case }
}

/// SSM analogue: `|x − x̂|²` on the same scatterer, `|x|² + |x̂|²` otherwise.
pub fn eta_bar_ssm<T: Real>(x: Complex<T>, x_hat: Complex<T>, same_k: bool) -> T {
    if same_k {
        (x - x_hat).norm_sqr()
    } else {
        x.norm_sqr() + x_hat.norm_sqr()
    }
}

/// PEP for a fixed channel: `Q(√(ρη/2))`.
pub fn pep_conditional<T: Real>(snr: T, eta: T) -> T {
    q_function((snr * eta * T::lit(0.5)).max(T::zero()).sqrt())
}

/// Fading-averaged PEP in closed form.
pub fn pep_closed_form<T: Real>(snr: T, eta_bar: T, convention: PepConvention) -> T {
    let a = snr * eta_bar;
    if !(a > T::zero()) {
        return T::lit(0.5);
    }
    let c = T::lit(4.0 / convention.gamma_mean());
    // ½(1 − √(a/(a + c))) written as ½ c / ((a + c)(1 + √(a/(a+c)))) to avoid cancellation
    let ratio = a / (a + c);
    T::lit(0.5) * c / ((a + c) * (T::one() + ratio.sqrt()))
}

/// Numerical fading average `∫ f(γ) Q(√(ρη̄γ/2)) dγ`; the independent check on [`pep_closed_form`].
pub fn pep_quadrature<T: Real>(snr: T, eta_bar: T, convention: PepConvention) -> Result<T> {
    let a = snr * eta_bar;
    if !(a > T::zero()) {
        return Ok(T::lit(0.5));
    }
    let mean = T::lit(convention.gamma_mean());
    let half_a = a * T::lit(0.5);
    let q = integrate_semi_infinite(
        |g: T| (-g / mean).exp() / mean * q_function((half_a * g).sqrt()),
        T::lit(1e-10).max(T::epsilon() * T::lit(64.0)),
        T::zero(),
    )?;
    Ok(q.value)
}

/// High-SNR PEP `13/(24ρη̄)`, capped at ½.
pub fn pep_asymptotic<T: Real>(snr: T, eta_bar: T) -> Result<T> {
    pep_asymptotic_with(snr, eta_bar, PepConvention::ChiSquare)
}

/// High-SNR PEP from the two-exponential Q approximation under either
/// convention: `13/(24ρη̄)` for [`PepConvention::ChiSquare`], `13/(12ρη̄)`
/// for [`PepConvention::ExactModel`]; capped at ½.
pub fn pep_asymptotic_with<T: Real>(snr: T, eta_bar: T, convention: PepConvention) -> Result<T> {
    if !(snr > T::zero()) || !(eta_bar > T::zero()) {
        return Err(Error::Domain(format!("asymptotic PEP needs ρ > 0 and η̄ > 0, got ρ = {snr}, η̄ = {eta_bar}")));
    }
    let scale = T::lit(13.0 / (12.0 * convention.gamma_mean()));
    Ok((scale / (snr * eta_bar)).min(T::lit(0.5)))
}

/// Union-bound weights grouped by effective distance.
///
/// `terms[i] = (η̄_i, W_i)` with `W_i` the summed Hamming distance of every
/// ordered pair at distance `η̄_i`; the bound is
/// `Σ_i W_i PEP(ρ, η̄_i) / (symbols · bits)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceSpectrum<T> {
    pub terms: Vec<(T, u64)>,
    pub symbols: usize,
    pub bits: u32,
}

fn group<T: Real>(mut raw: Vec<(T, u64)>) -> Vec<(T, u64)> {
    raw.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances"));
    let tol = T::lit(1e-12);
    let mut out: Vec<(T, u64)> = Vec::new();
    for (eta, w) in raw {
        match out.last_mut() {
            Some(last) if (eta - last.0).abs() <= tol * last.0.max(T::one()) => last.1 += w,
            _ => out.push((eta, w)),
        }
    }
    out
}

impl<T: Real> DistanceSpectrum<T> {
    /// QSSM pairs over the full book; self-pairs are excluded.
    pub fn qssm(book: &SymbolBook<T>) -> Self {
        let symbols = book.symbols();
        let mut raw = Vec::with_capacity(symbols.len() * symbols.len());
        for s in symbols {
            for t in symbols {
                if s.label == t.label {
                    continue;
                }
                let eta = eta_bar(s.x(), t.x(), s.k1 == t.k1, s.k2 == t.k2).value;
                raw.push((eta, label_distance(s.label, t.label) as u64));
            }
        }
        DistanceSpectrum { terms: group(raw), symbols: symbols.len(), bits: book.bits_per_symbol() }
    }

    /// SSM pairs over `L` scatterers and `constellation`.
    pub fn ssm(paths: usize, constellation: &Constellation<T>) -> Result<Self> {
        let path_bits = crate::modem::log2_exact(paths, "scatterer count")?;
        let symbols = crate::modem::ssm_symbols(paths, constellation);
        let mut raw = Vec::with_capacity(symbols.len() * symbols.len());
        for s in &symbols {
            for t in &symbols {
                if s.label == t.label {
                    continue;
                }
                raw.push((eta_bar_ssm(s.x, t.x, s.k == t.k), label_distance(s.label, t.label) as u64));
            }
        }
        Ok(DistanceSpectrum {
            terms: group(raw),
            symbols: symbols.len(),
            bits: path_bits + constellation.bits_per_symbol(),
        })
    }

    pub fn union_bound(&self, snr: T, kernel: PepKernel) -> Result<T> {
        if self.bits == 0 {
            return Ok(T::zero());
        }
        let mut total = T::zero();
        for &(eta, weight) in &self.terms {
            total = total + T::lit(weight as f64) * kernel.evaluate(snr, eta)?;
        }
        Ok(total / T::lit(self.symbols as f64 * self.bits as f64))
    }
}

/// Analytical and asymptotic union bounds at one SNR.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbepPoint {
    pub snr_db: f64,
    pub abep_analytical: f64,
    pub abep_asymptotic: f64,
}

pub fn db_to_linear<T: Real>(db: T) -> T {
    if db == T::neg_infinity() {
        return T::zero();
    }
    T::lit(10.0).powf(db / T::lit(10.0))
}

/// QSSM union bound on the ABEP.
pub fn abep_union_bound<T: Real>(book: &SymbolBook<T>, snr: T, kernel: PepKernel) -> Result<T> {
    DistanceSpectrum::qssm(book).union_bound(snr, kernel)
}

/// SSM union bound on the ABEP.
pub fn abep_union_bound_ssm<T: Real>(
    paths: usize,
    constellation: &Constellation<T>,
    snr: T,
    kernel: PepKernel,
) -> Result<T> {
    DistanceSpectrum::ssm(paths, constellation)?.union_bound(snr, kernel)
}

/// Both bounds of a spectrum at `snr_db`.
pub fn abep_point(spectrum: &DistanceSpectrum<f64>, snr_db: f64, convention: PepConvention) -> Result<AbepPoint> {
    let snr = db_to_linear(snr_db);
    let analytical = spectrum.union_bound(snr, PepKernel::ClosedForm(convention))?;
    let asymptotic = if snr > 0.0 {
        spectrum.union_bound(snr, PepKernel::Asymptotic(convention))?
    } else {
        f64::NAN
    };
    Ok(AbepPoint { snr_db, abep_analytical: analytical, abep_asymptotic: asymptotic })
}
