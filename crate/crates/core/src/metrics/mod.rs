//! Event-time forecast scoring: first-passage distributions, the four core
//! metrics (EETE, ET-F1, NLL, Brier), calibration diagnostics, and regime
//! probability traces. All operations are pure over immutable inputs.

pub mod calibration;
pub mod distribution;
pub mod regime;
pub mod scores;

pub use calibration::{ece_reliability, CalibrationReport, ReliabilityBin};
pub use distribution::{day_outcome, prob_to_rate, JointEventDistribution, SamplerKind};
pub use regime::{moving_average, regime_probability_trace, RegimeTrace};
pub use scores::{brier, eete, et_f1, nll, EventOutcome, EventRecord};

use serde::{Deserialize, Serialize};

/// The four metrics over one batch of forecasts, absent when no record in the
/// batch carries an event.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub eete: Option<f64>,
    pub et_f1: Option<f64>,
    pub nll: Option<f64>,
    pub brier: Option<f64>,
    pub event_count: usize,
}

pub fn score_batch(
    predictions: &[JointEventDistribution],
    truth: &[EventRecord],
) -> MetricsSummary {
    MetricsSummary {
        eete: eete(predictions, truth),
        et_f1: et_f1(predictions, truth),
        nll: nll(predictions, truth),
        brier: brier(predictions, truth),
        event_count: truth.iter().filter(|r| r.event.is_some()).count(),
    }
}
