//! Reconstruction error metrics.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Sum of squared differences.
    Sse,
    /// Mean absolute difference.
    Mae,
}

impl Metric {
    pub fn eval(self, a: &Matrix, b: &Matrix) -> Result<f64> {
        match self {
            Metric::Sse => metric_sse(a, b),
            Metric::Mae => metric_mae(a, b),
        }
    }
}

pub fn metric_sse(a: &Matrix, b: &Matrix) -> Result<f64> {
    a.ensure_same_shape(b)?;
    Ok(a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum())
}

pub fn metric_mae(a: &Matrix, b: &Matrix) -> Result<f64> {
    a.ensure_same_shape(b)?;
    let total: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .sum();
    Ok(total / a.len() as f64)
}
