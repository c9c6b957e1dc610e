//! Event-time metrics: EETE, ET-F1, NLL, Brier.
//!
//! All four score per-agent joint event-time distributions against realized
//! event records, restricted to event-bearing trajectories.

use crate::metrics::distribution::JointEventDistribution;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Realized outcome for one agent within the forecast horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventRecord {
    pub agent: usize,
    /// Realized transition, None when no event occurred in the horizon.
    pub event: Option<EventOutcome>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventOutcome {
    pub from: usize,
    pub to: usize,
    /// 1-based day within the horizon.
    pub day: usize,
}

const PROB_FLOOR: f64 = 1e-12;

/// Expected Event Time Error: mean |expected day - true day| over
/// event-bearing records, with no-event mass mapped to day H+1. Returns None
/// when no record carries an event.
pub fn eete(predictions: &[JointEventDistribution], truth: &[EventRecord]) -> Option<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for (pred, rec) in predictions.iter().zip(truth) {
        if let Some(ev) = &rec.event {
            total += (pred.expected_day() - ev.day as f64).abs();
            count += 1;
        }
    }
    (count > 0).then(|| total / count as f64)
}

/// Event-Type Macro-F1 over transition types present in truth or predictions.
/// The predicted type is the argmax marginal type mass (ties broken by the
/// lexicographically first pair); no-event is not a class.
pub fn et_f1(predictions: &[JointEventDistribution], truth: &[EventRecord]) -> Option<f64> {
    let mut tp: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut fp: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut fn_: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut classes: std::collections::BTreeSet<(usize, usize)> = Default::default();
    let mut any = false;
    for (pred, rec) in predictions.iter().zip(truth) {
        let Some(ev) = &rec.event else { continue };
        any = true;
        let true_type = (ev.from, ev.to);
        classes.insert(true_type);
        let Some(pred_type) = pred.predicted_type() else {
            *fn_.entry(true_type).or_insert(0) += 1;
            continue;
        };
        classes.insert(pred_type);
        if pred_type == true_type {
            *tp.entry(true_type).or_insert(0) += 1;
        } else {
            *fp.entry(pred_type).or_insert(0) += 1;
            *fn_.entry(true_type).or_insert(0) += 1;
        }
    }
    if !any {
        return None;
    }
    let mut f1_sum = 0.0;
    for class in &classes {
        let tp = *tp.get(class).unwrap_or(&0) as f64;
        let fp = *fp.get(class).unwrap_or(&0) as f64;
        let fn_ = *fn_.get(class).unwrap_or(&0) as f64;
        let f1 = if tp == 0.0 && (fp > 0.0 || fn_ > 0.0) {
            0.0
        } else if tp == 0.0 {
            0.0
        } else {
            2.0 * tp / (2.0 * tp + fp + fn_)
        };
        f1_sum += f1;
    }
    Some(f1_sum / classes.len() as f64)
}

/// Joint event-time negative log-likelihood: mean over event-bearing records
/// of -ln p(true type, true day), with probabilities floored at 1e-12.
pub fn nll(predictions: &[JointEventDistribution], truth: &[EventRecord]) -> Option<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for (pred, rec) in predictions.iter().zip(truth) {
        let Some(ev) = &rec.event else { continue };
        let mass = pred
            .types
            .iter()
            .position(|&t| t == (ev.from, ev.to))
            .map(|idx| pred.p[idx][ev.day - 1])
            .unwrap_or(0.0);
        total += -(mass.max(PROB_FLOOR)).ln();
        count += 1;
    }
    (count > 0).then(|| total / count as f64)
}

/// Multi-outcome Brier score over all (type, day) cells plus no-event, with
/// one-hot truth; mean over event-bearing records. Range [0, 2].
pub fn brier(predictions: &[JointEventDistribution], truth: &[EventRecord]) -> Option<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for (pred, rec) in predictions.iter().zip(truth) {
        let Some(ev) = &rec.event else { continue };
        let mut score = 0.0;
        for (idx, t) in pred.types.iter().enumerate() {
            for d in 1..=pred.horizon {
                let y = if *t == (ev.from, ev.to) && d == ev.day { 1.0 } else { 0.0 };
                score += (pred.p[idx][d - 1] - y).powi(2);
            }
        }
        // no-event cell: y = 0 for event-bearing records
        score += pred.p_none.powi(2);
        total += score;
        count += 1;
    }
    (count > 0).then(|| total / count as f64)
}
