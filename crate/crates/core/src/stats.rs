//! Descriptive statistics: mean/standard deviation and the quantized mode.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of decimals used when quantizing values for the mode.
pub const DEFAULT_QUANT_DECIMALS: u32 = 2;
/// Largest accepted `quant_decimals`.
pub const MAX_QUANT_DECIMALS: u32 = 12;

/// Divisor used for the variance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivisorConvention {
    /// Divide by `N`.
    Population,
    /// Divide by `N - 1` (Matlab's `std` default).
    #[default]
    Sample,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataStats {
    pub mean: f64,
    pub std: f64,
    pub divisor_convention: DivisorConvention,
}

impl DataStats {
    pub fn variance(&self) -> f64 {
        self.std * self.std
    }
}

/// Mean and standard deviation of `v`.
///
/// A constant input yields `mean == v[0]` and `std == 0` exactly, so that
/// `std == 0` holds precisely when all values are equal.
pub fn stats(v: &[f64], convention: DivisorConvention) -> Result<DataStats> {
    let first = *v.first().ok_or(Error::EmptyInput)?;
    if convention == DivisorConvention::Sample && v.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: v.len(),
        });
    }
    if v.iter().all(|&x| x == first) {
        return Ok(DataStats {
            mean: first,
            std: 0.0,
            divisor_convention: convention,
        });
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    let divisor = match convention {
        DivisorConvention::Population => n,
        DivisorConvention::Sample => n - 1.0,
    };
    let std = (ss / divisor).sqrt();
    Ok(DataStats {
        mean,
        // a non-constant vector must not report zero spread
        std: if std > 0.0 { std } else { f64::MIN_POSITIVE },
        divisor_convention: convention,
    })
}

/// Like [`stats`], but a single value is treated as having zero spread
/// instead of failing under the sample convention.
pub fn stats_lenient(v: &[f64], convention: DivisorConvention) -> Result<DataStats> {
    if v.len() == 1 {
        return Ok(DataStats {
            mean: v[0],
            std: 0.0,
            divisor_convention: convention,
        });
    }
    stats(v, convention)
}

/// Most frequent quantized value of a sequence with the positions where it occurs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    /// The winning quantized value.
    pub mode_value: f64,
    /// Raw (unquantized) value at the first listed index.
    pub representative: f64,
    /// Strictly increasing positions whose quantized value is `mode_value`.
    pub indices: Vec<usize>,
    pub quant_decimals: u32,
}

impl ModeSummary {
    pub fn count(&self) -> usize {
        self.indices.len()
    }
}

/// Rounds half away from zero to `decimals` places. `-0.0` becomes `0.0`.
pub fn quantize(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (x * scale).round() / scale + 0.0
}

/// Mode of `v` after quantization; ties go to the smallest quantized value.
pub fn mode_with_indices(v: &[f64], quant_decimals: u32) -> Result<ModeSummary> {
    if v.is_empty() {
        return Err(Error::EmptyInput);
    }
    if quant_decimals > MAX_QUANT_DECIMALS {
        return Err(Error::InvalidRange(format!(
            "quant_decimals {quant_decimals} > {MAX_QUANT_DECIMALS}"
        )));
    }
    let q: Vec<f64> = v.iter().map(|&x| quantize(x, quant_decimals)).collect();
    let mut order: Vec<usize> = (0..q.len()).collect();
    // stable: equal keys keep ascending index order
    order.sort_by(|&a, &b| q[a].total_cmp(&q[b]));

    let mut best: Option<(usize, usize)> = None; // (start, len) in `order`
    let mut start = 0;
    while start < order.len() {
        let key = q[order[start]];
        let mut end = start + 1;
        while end < order.len() && q[order[end]].total_cmp(&key) == Ordering::Equal {
            end += 1;
        }
        let len = end - start;
        if best.is_none_or(|(_, best_len)| len > best_len) {
            best = Some((start, len));
        }
        start = end;
    }
    let (start, len) = best.expect("non-empty input has a mode");
    let indices = order[start..start + len].to_vec();
    Ok(ModeSummary {
        mode_value: q[indices[0]],
        representative: v[indices[0]],
        indices,
        quant_decimals,
    })
}
