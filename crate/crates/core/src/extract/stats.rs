use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ExtractError, ExtractionReport, Result};

pub const DEFAULT_BINS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges; logarithmic spacing when `log` is set.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub log: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation (0 for a single value).
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub count: usize,
    pub metrics: BTreeMap<String, MetricSummary>,
}

fn histogram(values: &[f64], bins: usize, log: bool) -> Histogram {
    let map = |v: f64| if log { v.log10() } else { v };
    let lo = values.iter().copied().map(map).fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().map(map).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> =
        (0..=bins).map(|k| lo + width * k as f64).map(|e| if log { 10f64.powf(e) } else { e }).collect();
    let mut counts = vec![0; bins];
    for &v in values {
        let k = (((map(v) - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Histogram { edges, counts, log }
}

fn summarize(values: &[f64], bins: usize, log: bool) -> MetricSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    MetricSummary {
        mean,
        std: var.sqrt(),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        histogram: histogram(values, bins, log),
    }
}

/// Mean, spread and histogram of each figure of merit over a population.
pub fn batch_statistics(reports: &[ExtractionReport], bins: usize) -> Result<BatchSummary> {
    if reports.is_empty() {
        return Err(ExtractError::Precondition("batch statistics need at least one report".into()));
    }
    if bins == 0 {
        return Err(ExtractError::Precondition("histogram needs at least one bin".into()));
    }
    let pick = |f: fn(&ExtractionReport) -> f64| reports.iter().map(f).collect::<Vec<_>>();
    let mut metrics = BTreeMap::new();
    metrics.insert("mu_sat".to_string(), summarize(&pick(|r| r.mu_sat), bins, false));
    metrics.insert("vth".to_string(), summarize(&pick(|r| r.vth), bins, false));
    metrics.insert("ss".to_string(), summarize(&pick(|r| r.ss), bins, false));
    metrics.insert("on_off".to_string(), summarize(&pick(|r| r.on_off), bins, true));
    metrics.insert("gm_max_per_width".to_string(), summarize(&pick(|r| r.gm_max_per_width), bins, false));
    Ok(BatchSummary { count: reports.len(), metrics })
}
