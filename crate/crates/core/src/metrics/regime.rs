//! Daily probability-on-realized-regime traces.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegimeTrace {
    /// Mean over agents of p(state = realized regime), per day.
    pub daily: Vec<f64>,
    /// 7-day moving average, truncated at the edges.
    pub smoothed: Vec<f64>,
}

/// `per_agent_on_regime[d]` holds, for day d, each agent's probability on the
/// realized regime label for that day. The realized labels are only used for
/// alignment checking here; the probabilities are assumed pre-aligned.
pub fn regime_probability_trace(
    per_agent_on_regime: &[Vec<f64>],
    realized_labels: &[usize],
) -> Result<RegimeTrace> {
    if per_agent_on_regime.len() != realized_labels.len() {
        return Err(Error::Metrics(format!(
            "have {} prediction days but {} regime labels",
            per_agent_on_regime.len(),
            realized_labels.len()
        )));
    }
    let daily: Vec<f64> = per_agent_on_regime
        .iter()
        .map(|agents| {
            if agents.is_empty() {
                0.0
            } else {
                agents.iter().sum::<f64>() / agents.len() as f64
            }
        })
        .collect();
    Ok(RegimeTrace {
        smoothed: moving_average(&daily, 7),
        daily,
    })
}

/// Trailing moving average with the window truncated at the left edge.
pub fn moving_average(series: &[f64], window: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(series.len());
    for i in 0..series.len() {
        let lo = i.saturating_sub(window - 1);
        let slice = &series[lo..=i];
        out.push(slice.iter().sum::<f64>() / slice.len() as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_trace_is_one() {
        let days = vec![vec![1.0, 1.0, 1.0]; 5];
        let t = regime_probability_trace(&days, &[0; 5]).unwrap();
        assert!(t.daily.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!(t.smoothed.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn uniform_three_state_trace_is_one_third() {
        let days = vec![vec![1.0 / 3.0; 10]; 4];
        let t = regime_probability_trace(&days, &[1; 4]).unwrap();
        assert!(t.daily.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn truncated_moving_average_arithmetic() {
        // {0.5, 0.7, 0.9} with window 7 -> {0.5, 0.6, 0.7}
        let ma = moving_average(&[0.5, 0.7, 0.9], 7);
        assert!((ma[0] - 0.5).abs() < 1e-12);
        assert!((ma[1] - 0.6).abs() < 1e-12);
        assert!((ma[2] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn label_misalignment_is_an_error() {
        assert!(regime_probability_trace(&[vec![0.5]], &[0, 1]).is_err());
    }
}
