use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("modulation order {0} is not a supported power of two")]
    InvalidOrder(usize),
    #[error("QAM needs at least 4 points; use PSK for M = {0}")]
    QamTooSmall(usize),
    #[error("{what} must be a power of two, got {value}")]
    NotPowerOfTwo { what: &'static str, value: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("bit string has length {got}, expected {expected}")]
    LabelLength { expected: usize, got: usize },
    #[error("symbol is not a member of the symbol book")]
    NotInBook,
    #[error("scatterer index {index} outside 1..={paths}")]
    IndexOutOfRange { index: usize, paths: usize },
    #[error("cannot place {paths} paths with sine separation {separation} on a {elements}-element array")]
    InfeasibleAngles { paths: usize, elements: usize, separation: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after {intervals} intervals")]
    Integration { estimate: f64, error: f64, intervals: usize },
    #[error("curve does not cross ABEP {target:e} within its SNR range")]
    NoCrossing { target: f64 },
    #[error("at least one trial is required")]
    ZeroTrials,
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
