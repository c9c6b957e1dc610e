//! Ensemble hazard regressor: per-transition logistic heads over a shared
//! trunk, one independently seeded member per ensemble slot, uncertainty from
//! the spread of member predictions.

use crate::error::{Error, Result};
use crate::neural::mlp::Mlp;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressorHyper {
    pub hidden: (usize, usize),
    pub epochs: usize,
    pub step_size: f64,
    pub weight_penalty: f64,
    pub ensemble: usize,
}

impl Default for RegressorHyper {
    fn default() -> Self {
        Self {
            hidden: (64, 64),
            epochs: 500,
            step_size: 0.4,
            weight_penalty: 1e-5,
            ensemble: 5,
        }
    }
}

/// One (cluster, day) training instance: a feature vector plus the empirical
/// target hazard per transition, masked where no member was at risk.
#[derive(Debug, Clone)]
pub struct TrainingInstance {
    pub features: Vec<f64>,
    pub targets: Vec<f64>,
    pub mask: Vec<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HazardRegressor {
    pub members: Vec<Mlp>,
    pub transitions: Vec<(usize, usize)>,
    pub class_weights: Vec<f64>,
    pub seeds: Vec<u64>,
    pub training_loss: Vec<Vec<f64>>,
}

/// Inverse-frequency class weights with a floor of 1 and a cap of 8. The
/// cap keeps near-empty classes from starving the frequent heads of
/// gradient under the shared trunk.
pub fn class_weights(event_counts: &[f64]) -> Vec<f64> {
    let k = event_counts.len();
    if k == 0 {
        return vec![];
    }
    let mean = event_counts.iter().sum::<f64>() / k as f64;
    event_counts
        .iter()
        .map(|&c| (mean / c.max(0.5)).clamp(1.0, 8.0))
        .collect()
}

/// Population mean and standard deviation of ensemble member outputs.
pub fn ensemble_stats(values: &[f64]) -> (f64, f64) {
    let e = values.len() as f64;
    let mean = values.iter().sum::<f64>() / e;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / e;
    (mean, var.sqrt())
}

/// Trains the ensemble by full-batch gradient descent. Deterministic per
/// seed; instance order does not affect the fit (full-batch sums).
pub fn train_regressor(
    instances: &[TrainingInstance],
    transitions: Vec<(usize, usize)>,
    event_counts: &[f64],
    hyper: &RegressorHyper,
    base_seed: u64,
) -> Result<HazardRegressor> {
    if instances.len() < 8 {
        return Err(Error::Engine(format!(
            "need >= 8 training instances, got {}",
            instances.len()
        )));
    }
    let d_in = instances[0].features.len();
    let n_out = transitions.len();
    for inst in instances {
        if inst.features.len() != d_in || inst.targets.len() != n_out || inst.mask.len() != n_out {
            return Err(Error::DimensionMismatch("inconsistent training instance widths".into()));
        }
        for (t, &on) in inst.targets.iter().zip(&inst.mask) {
            if on && !(0.0..=1.0).contains(t) {
                return Err(Error::Engine(format!("target {t} outside [0, 1]")));
            }
        }
    }
    let weights = class_weights(event_counts);
    if weights.len() != n_out {
        return Err(Error::DimensionMismatch("event count width".into()));
    }
    let xs: Vec<Vec<f64>> = instances.iter().map(|i| i.features.clone()).collect();
    let ts: Vec<Vec<f64>> = instances.iter().map(|i| i.targets.clone()).collect();
    let ms: Vec<Vec<bool>> = instances.iter().map(|i| i.mask.clone()).collect();

    // Start every logistic head at its class's mean-target logit.
    let output_bias: Vec<f64> = (0..n_out)
        .map(|o| {
            let mut sum = 0.0;
            let mut count = 0usize;
            for inst in instances {
                if inst.mask[o] {
                    sum += inst.targets[o];
                    count += 1;
                }
            }
            let p = if count > 0 { (sum / count as f64).clamp(1e-3, 1.0 - 1e-3) } else { 0.5 };
            (p / (1.0 - p)).ln()
        })
        .collect();

    let mut members = Vec::with_capacity(hyper.ensemble);
    let mut seeds = Vec::with_capacity(hyper.ensemble);
    let mut traces = Vec::with_capacity(hyper.ensemble);
    for member in 0..hyper.ensemble {
        let seed = base_seed.wrapping_add(member as u64);
        seeds.push(seed);
        let mut mlp = Mlp::init_with_output_bias(d_in, hyper.hidden, n_out, seed, &output_bias);
        let mut trace = Vec::with_capacity(hyper.epochs);
        for epoch in 0..hyper.epochs {
            let (loss, grad) = mlp
                .loss_and_grad(&xs, &ts, &ms, &weights, hyper.weight_penalty)
                .map_err(|e| match e {
                    Error::NonFiniteLoss { detail, .. } => Error::NonFiniteLoss { epoch, detail },
                    other => other,
                })?;
            trace.push(loss);
            mlp.gd_step(&grad, hyper.step_size);
        }
        members.push(mlp);
        traces.push(trace);
    }
    Ok(HazardRegressor {
        members,
        transitions,
        class_weights: weights,
        seeds,
        training_loss: traces,
    })
}

impl HazardRegressor {
    /// Per-transition (hazard, uncertainty): ensemble mean and population
    /// standard deviation.
    pub fn predict_hazards(&self, x: &[f64]) -> Result<Vec<((usize, usize), (f64, f64))>> {
        let d_in = self.members[0].d_in;
        if x.len() != d_in {
            return Err(Error::DimensionMismatch(format!(
                "feature width {} != expected {d_in}",
                x.len()
            )));
        }
        let outputs: Vec<Vec<f64>> = self.members.iter().map(|m| m.predict(x)).collect();
        Ok(self
            .transitions
            .iter()
            .enumerate()
            .map(|(o, &t)| {
                let member_values: Vec<f64> = outputs.iter().map(|out| out[o]).collect();
                (t, ensemble_stats(&member_values))
            })
            .collect())
    }

    pub fn parameter_count(&self) -> usize {
        self.members.iter().map(|m| m.params.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn constant_instances(n: usize, target: f64) -> Vec<TrainingInstance> {
        let mut rng = Stream::keyed(5, "reg-test", &[]);
        (0..n)
            .map(|_| TrainingInstance {
                features: (0..6).map(|_| rng.uniform_range(-1.0, 1.0)).collect(),
                targets: vec![target, target],
                mask: vec![true, true],
            })
            .collect()
    }

    #[test]
    fn fits_constant_targets_within_tolerance() {
        let instances = constant_instances(24, 0.3);
        let hyper = RegressorHyper {
            hidden: (16, 16),
            epochs: 400,
            step_size: 0.5,
            weight_penalty: 0.0,
            ensemble: 3,
        };
        let reg = train_regressor(&instances, vec![(0, 1), (1, 2)], &[10.0, 10.0], &hyper, 3).unwrap();
        for inst in &instances {
            let preds = reg.predict_hazards(&inst.features).unwrap();
            for (_, (mean, _)) in preds {
                assert!((mean - 0.3).abs() <= 0.02, "prediction {mean}");
            }
        }
    }

    #[test]
    fn loss_non_increasing_over_epochs() {
        let instances = constant_instances(16, 0.4);
        let hyper = RegressorHyper {
            hidden: (8, 8),
            epochs: 200,
            step_size: 0.3,
            weight_penalty: 1e-5,
            ensemble: 2,
        };
        let reg = train_regressor(&instances, vec![(0, 1), (1, 2)], &[5.0, 5.0], &hyper, 1).unwrap();
        for trace in &reg.training_loss {
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-8, "loss increased {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn identical_seeds_identical_parameters() {
        let instances = constant_instances(12, 0.25);
        let hyper = RegressorHyper {
            hidden: (8, 8),
            epochs: 50,
            step_size: 0.2,
            weight_penalty: 0.0,
            ensemble: 1,
        };
        let a = train_regressor(&instances, vec![(0, 1), (1, 2)], &[1.0, 1.0], &hyper, 9).unwrap();
        let b = train_regressor(&instances, vec![(0, 1), (1, 2)], &[1.0, 1.0], &hyper, 9).unwrap();
        assert_eq!(a.members[0].params, b.members[0].params);
    }

    #[test]
    fn instance_order_does_not_change_the_fit() {
        let instances = constant_instances(12, 0.25);
        let mut shuffled = instances.clone();
        shuffled.reverse();
        let hyper = RegressorHyper {
            hidden: (8, 8),
            epochs: 60,
            step_size: 0.2,
            weight_penalty: 1e-4,
            ensemble: 1,
        };
        let a = train_regressor(&instances, vec![(0, 1), (1, 2)], &[1.0, 1.0], &hyper, 9).unwrap();
        let b = train_regressor(&shuffled, vec![(0, 1), (1, 2)], &[1.0, 1.0], &hyper, 9).unwrap();
        for (x, y) in a.members[0].params.iter().zip(&b.members[0].params) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn ensemble_stats_hand_example() {
        // two members predicting 0.2 and 0.4 -> mean 0.3, population std 0.1
        let (mean, std) = ensemble_stats(&[0.2, 0.4]);
        assert!((mean - 0.3).abs() < 1e-12);
        assert!((std - 0.1).abs() < 1e-12);
    }

    #[test]
    fn single_member_has_zero_uncertainty() {
        let (_, std) = ensemble_stats(&[0.7]);
        assert_eq!(std, 0.0);
        let (_, std) = ensemble_stats(&[0.3, 0.3, 0.3]);
        assert_eq!(std, 0.0);
    }

    #[test]
    fn too_few_instances_is_an_error() {
        let instances = constant_instances(4, 0.3);
        let hyper = RegressorHyper::default();
        assert!(train_regressor(&instances, vec![(0, 1), (1, 2)], &[1.0, 1.0], &hyper, 1).is_err());
    }

    #[test]
    fn class_weights_floor_and_inverse_frequency() {
        let w = class_weights(&[10.0, 1.0, 5.0]);
        // mean count 16/3 = 5.33; w = [max(1, .53), max(1, 5.33), max(1, 1.07)]
        assert_eq!(w[0], 1.0);
        assert!((w[1] - 16.0 / 3.0).abs() < 1e-12);
        assert!((w[2] - 16.0 / 15.0).abs() < 1e-12);
    }
}
