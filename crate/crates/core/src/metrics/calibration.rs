//! Expected calibration error and reliability bins.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean_confidence: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub ece: f64,
    pub bins: Vec<ReliabilityBin>,
}

/// Equal-width reliability binning over [0, 1]:
/// ECE = sum_b (n_b / n) * |acc_b - conf_b|.
pub fn ece_reliability(
    confidences: &[f64],
    correct: &[bool],
    bins: usize,
) -> Result<CalibrationReport> {
    if bins < 2 {
        return Err(Error::Metrics(format!("need >= 2 bins, got {bins}")));
    }
    if confidences.is_empty() {
        return Err(Error::Metrics("empty calibration input".into()));
    }
    if confidences.len() != correct.len() {
        return Err(Error::Metrics("confidence/correct length mismatch".into()));
    }
    let n = confidences.len() as f64;
    let mut counts = vec![0usize; bins];
    let mut conf_sum = vec![0.0; bins];
    let mut acc_sum = vec![0.0; bins];
    for (&c, &ok) in confidences.iter().zip(correct) {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::Metrics(format!("confidence {c} outside [0, 1]")));
        }
        let b = ((c * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
        conf_sum[b] += c;
        acc_sum[b] += if ok { 1.0 } else { 0.0 };
    }
    let mut ece = 0.0;
    let mut out = Vec::with_capacity(bins);
    for b in 0..bins {
        let (mean_conf, acc) = if counts[b] > 0 {
            (conf_sum[b] / counts[b] as f64, acc_sum[b] / counts[b] as f64)
        } else {
            (0.0, 0.0)
        };
        if counts[b] > 0 {
            ece += counts[b] as f64 / n * (acc - mean_conf).abs();
        }
        out.push(ReliabilityBin {
            lo: b as f64 / bins as f64,
            hi: (b + 1) as f64 / bins as f64,
            count: counts[b],
            mean_confidence: mean_conf,
            accuracy: acc,
        });
    }
    Ok(CalibrationReport { ece, bins: out })
}
