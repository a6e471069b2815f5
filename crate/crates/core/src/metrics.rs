//! Fairness index and per-scheduler summaries.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("no values to aggregate")]
    Empty,
    #[error("values must be positive and finite, got {0}")]
    NonPositive(f64),
}

/// `(Σd)² / (n · Σd²)`: 1 when every scheduler sees the same value, down to
/// `1/n` when one scheduler takes everything.
pub fn fairness_index(d: &[f64]) -> Result<f64, MetricsError> {
    if d.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(&bad) = d.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(MetricsError::NonPositive(bad));
    }
    let sum: f64 = d.iter().sum();
    let sum_sq: f64 = d.iter().map(|x| x * x).sum();
    // ≤ 1 by Cauchy–Schwarz; the clamp only strips rounding
    Ok((sum * sum / (d.len() as f64 * sum_sq)).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

pub fn summarize(values: &[f64]) -> Result<Summary, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok(Summary { min, max, mean })
}

/// Fairness of one algorithm's per-scheduler response times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairnessReport {
    pub fi: f64,
    pub per_scheduler: Vec<f64>,
}

impl FairnessReport {
    pub fn new(per_scheduler: Vec<f64>) -> Result<Self, MetricsError> {
        let fi = fairness_index(&per_scheduler)?;
        Ok(Self { fi, per_scheduler })
    }
}
