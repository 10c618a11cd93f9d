use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// 95% Wilson score interval for `errors` successes in `n` trials.
pub fn binomial_ci(errors: u64, n: u64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::ZeroTrials);
    }
    if errors > n {
        return Err(Error::param("errors", format!("{errors} errors exceed {n} trials")));
    }
    let n_f = n as f64;
    let p = errors as f64 / n_f;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = Z95 * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let low = if errors == 0 { 0.0 } else { (centre - half).max(0.0) };
    let high = if errors == n { 1.0 } else { (centre + half).min(1.0) };
    Ok((low.min(p), high.max(p)))
}

/// Simulated bit error rate at one SNR.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerEstimate {
    pub snr_db: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub bits_per_trial: u32,
    pub abep: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl BerEstimate {
    pub fn new(snr_db: f64, trials: u64, bit_errors: u64, bits_per_trial: u32) -> Result<Self> {
        let bits = trials * bits_per_trial as u64;
        let (ci_low, ci_high) = binomial_ci(bit_errors, bits)?;
        Ok(BerEstimate {
            snr_db,
            trials,
            bit_errors,
            bits_per_trial,
            abep: bit_errors as f64 / bits as f64,
            ci_low,
            ci_high,
        })
    }

    pub fn ci_half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}
