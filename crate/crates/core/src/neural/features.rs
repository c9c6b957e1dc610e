//! Cluster-day feature vectors for the neural hazard pathway.
//!
//! Three modalities concatenated per the manifest: a tabular snapshot (state
//! fractions, degree stats, exogenous values), a temporal summary of the
//! lookback window (per-channel mean, last value, linear trend), and the mean
//! member row of the structural embedding. Standardization statistics come
//! from the lookback window only.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const DEGREE_STATS: usize = 4;
/// Standardized features are clamped here so a regime shift on a channel that
/// was constant during the lookback (std at the floor) stays a strong but
/// finite off-support signal instead of a numeric blowup.
pub const STANDARDIZED_CLAMP: f64 = 10.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub state_names: Vec<String>,
    pub exo_names: Vec<String>,
    /// Temporal channels: one per state fraction plus one per exogenous
    /// series; each contributes (mean, last, trend).
    pub temporal_window: usize,
    pub d_h: usize,
    /// Per-feature (mean, std) fitted on the lookback; identity when absent.
    pub standardization: Option<Vec<(f64, f64)>>,
}

impl FeatureManifest {
    pub fn new(state_names: Vec<String>, exo_names: Vec<String>, temporal_window: usize, d_h: usize) -> Self {
        Self {
            state_names,
            exo_names,
            temporal_window,
            d_h,
            standardization: None,
        }
    }

    pub fn n_channels(&self) -> usize {
        self.state_names.len() + self.exo_names.len()
    }

    /// Total feature width: |S| + degree stats + |exo| + 3 * channels + d_h.
    pub fn width(&self) -> usize {
        self.state_names.len() + DEGREE_STATS + self.exo_names.len() + 3 * self.n_channels() + self.d_h
    }

    /// Fits per-feature standardization stats (std floor 1e-6) on a batch of
    /// raw feature vectors.
    pub fn fit_standardization(&mut self, raw: &[Vec<f64>]) -> Result<()> {
        if raw.is_empty() {
            return Err(Error::Engine("cannot standardize an empty batch".into()));
        }
        let w = self.width();
        let n = raw.len() as f64;
        let mut stats = Vec::with_capacity(w);
        for j in 0..w {
            let mean = raw.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = raw.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            stats.push((mean, var.sqrt().max(1e-6)));
        }
        self.standardization = Some(stats);
        Ok(())
    }

    pub fn standardize(&self, raw: &[f64]) -> Vec<f64> {
        match &self.standardization {
            None => raw.to_vec(),
            Some(stats) => raw
                .iter()
                .zip(stats)
                .map(|(v, (m, s))| ((v - m) / s).clamp(-STANDARDIZED_CLAMP, STANDARDIZED_CLAMP))
                .collect(),
        }
    }
}

/// OLS slope of a series against day index 0..len-1.
pub fn linear_trend(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 2 {
        return 0.0;
    }
    let xm = (n - 1) as f64 / 2.0;
    let ym = series.iter().sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, y) in series.iter().enumerate() {
        let dx = i as f64 - xm;
        num += dx * (y - ym);
        den += dx * dx;
    }
    num / den
}

/// Raw (unstandardized) cluster-day feature vector.
///
/// `channel_history[c]` is channel c's series over the temporal window ending
/// at the feature day, with exactly `manifest.temporal_window` values; the
/// snapshot fields describe the feature day itself.
pub fn assemble_features(
    manifest: &FeatureManifest,
    phi: &[f64],
    degree_stats: &[f64; DEGREE_STATS],
    exo_today: &[f64],
    channel_history: &[Vec<f64>],
    graph_embedding: &[f64],
) -> Result<Vec<f64>> {
    if phi.len() != manifest.state_names.len() {
        return Err(Error::DimensionMismatch("phi width".into()));
    }
    if exo_today.len() != manifest.exo_names.len() {
        return Err(Error::DimensionMismatch("exogenous width".into()));
    }
    if channel_history.len() != manifest.n_channels() {
        return Err(Error::DimensionMismatch("channel count".into()));
    }
    if graph_embedding.len() != manifest.d_h {
        return Err(Error::DimensionMismatch("graph embedding width".into()));
    }
    for h in channel_history {
        if h.len() != manifest.temporal_window {
            return Err(Error::Engine(format!(
                "history window has {} values, expected {}",
                h.len(),
                manifest.temporal_window
            )));
        }
    }
    let mut out = Vec::with_capacity(manifest.width());
    out.extend_from_slice(phi);
    out.extend_from_slice(degree_stats);
    out.extend_from_slice(exo_today);
    for h in channel_history {
        let mean = h.iter().sum::<f64>() / h.len() as f64;
        out.push(mean);
        out.push(*h.last().unwrap());
        out.push(linear_trend(h));
    }
    out.extend_from_slice(graph_embedding);
    debug_assert_eq!(out.len(), manifest.width());
    if let Some(v) = out.iter().find(|v| !v.is_finite()) {
        return Err(Error::Engine(format!("non-finite feature value {v}")));
    }
    Ok(out)
}
