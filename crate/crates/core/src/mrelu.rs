//! Rectified learning units.
//!
//! [`relu_classic`] is the noisy rectifier `max(0, x + noise)`.
//! [`mrelu`] replaces the zero cut-off by the sample mean `m` of the input,
//! draws the noise from `N(m, s^2)` (sample statistics of the input) and
//! raises the rectified value to a sparsity exponent `n`:
//!
//! ```text
//! out_i = max(m, x_i + eps_i)^n,   eps_i ~ N(m, s^2)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stats::{stats_lenient, DivisorConvention};

pub const MIN_SPARSITY_EXPONENT: u32 = 1;
pub const MAX_SPARSITY_EXPONENT: u32 = 100;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// `N(mean(x), var(x))`, drawn independently per element.
    #[default]
    SampleStats,
    /// `N(0, 1)` per element.
    StandardNormal,
    /// No randomness: the noise takes the mean of its distribution.
    Zero,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffMode {
    Zero,
    #[default]
    SampleMean,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MreluConfig {
    pub sparsity_exponent: u32,
    pub noise_mode: NoiseMode,
    pub cutoff_mode: CutoffMode,
    /// Divisor used for the sample variance.
    pub divisor: DivisorConvention,
}

impl Default for MreluConfig {
    fn default() -> Self {
        Self {
            sparsity_exponent: 1,
            noise_mode: NoiseMode::SampleStats,
            cutoff_mode: CutoffMode::SampleMean,
            divisor: DivisorConvention::Sample,
        }
    }
}

impl MreluConfig {
    pub fn validate(&self) -> Result<()> {
        if !(MIN_SPARSITY_EXPONENT..=MAX_SPARSITY_EXPONENT).contains(&self.sparsity_exponent) {
            return Err(Error::InvalidConfig(format!(
                "sparsity_exponent {} outside [{MIN_SPARSITY_EXPONENT}, {MAX_SPARSITY_EXPONENT}]",
                self.sparsity_exponent
            )));
        }
        Ok(())
    }
}

/// `max(0, x_i + noise_i)` with noise per `noise_mode`.
pub fn relu_classic(x: &[f64], rng: &mut RngStream, noise_mode: NoiseMode) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (mean, var) = match noise_mode {
        NoiseMode::Zero => (0.0, 0.0),
        NoiseMode::StandardNormal => (0.0, 1.0),
        NoiseMode::SampleStats => {
            let s = stats_lenient(x, DivisorConvention::Sample)?;
            (s.mean, s.variance())
        }
    };
    x.iter()
        .map(|&xi| {
            let eps = match noise_mode {
                NoiseMode::Zero => 0.0,
                _ => rng.draw_gaussian(mean, var)?,
            };
            Ok((xi + eps).max(0.0))
        })
        .collect()
}

/// Values of `max(cutoff, x_i + eps_i)` before the exponent is applied.
pub fn mrelu_pre_exponent(x: &[f64], cfg: &MreluConfig, rng: &mut RngStream) -> Result<Vec<f64>> {
    cfg.validate()?;
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    if cfg.cutoff_mode == CutoffMode::SampleMean {
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeInput { index, value });
        }
    }
    let s = stats_lenient(x, cfg.divisor)?;
    let cutoff = match cfg.cutoff_mode {
        CutoffMode::Zero => 0.0,
        CutoffMode::SampleMean => s.mean,
    };
    x.iter()
        .map(|&xi| {
            let eps = match cfg.noise_mode {
                NoiseMode::SampleStats => rng.draw_gaussian(s.mean, s.variance())?,
                NoiseMode::StandardNormal => rng.draw_gaussian(0.0, 1.0)?,
                NoiseMode::Zero => s.mean,
            };
            Ok(cutoff.max(xi + eps))
        })
        .collect()
}

/// Modified ReLU: mean cut-off, sample-statistics noise, sparsity exponent.
pub fn mrelu(x: &[f64], cfg: &MreluConfig, rng: &mut RngStream) -> Result<Vec<f64>> {
    let pre = mrelu_pre_exponent(x, cfg, rng)?;
    let n = cfg.sparsity_exponent as i32;
    pre.into_iter()
        .enumerate()
        .map(|(i, p)| {
            let y = p.powi(n);
            if y.is_finite() {
                Ok(y)
            } else {
                Err(Error::NonFinite(i))
            }
        })
        .collect()
}
