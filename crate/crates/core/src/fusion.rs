//! Uncertainty-aware epistemic fusion of symbolic and neural hazards.
//!
//! Per transition: lambda_fused = (c_sym * lambda_sym + c_neu * lambda_neu)
//! / (c_sym + c_neu). Confidences come from the reciprocal rule
//! c = 1 / (u + eps) by default, or from a small trained calibrator.

use crate::error::{Error, Result};
use crate::rng::Stream;
use serde::{Deserialize, Serialize};

pub const CONFIDENCE_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    DefaultReciprocal,
    LearnedCalibrator,
    NaiveMean,
    SymbolicOnly,
    NeuralOnly,
}

impl Default for FusionMode {
    fn default() -> Self {
        FusionMode::DefaultReciprocal
    }
}

/// One fused transition hazard with its components.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FusedHazard {
    pub lambda_fused: f64,
    pub lambda_sym: f64,
    pub u_sym: f64,
    pub c_sym: f64,
    pub lambda_neu: f64,
    pub u_neu: f64,
    pub c_neu: f64,
    pub mode: FusionMode,
}

/// Confidence-weighted convex combination. Scale-invariant in the
/// confidences; errors when both are zero.
pub fn fuse(lambda_sym: f64, c_sym: f64, lambda_neu: f64, c_neu: f64) -> Result<f64> {
    if c_sym < 0.0 || c_neu < 0.0 {
        return Err(Error::Engine(format!("negative confidence ({c_sym}, {c_neu})")));
    }
    let total = c_sym + c_neu;
    if total <= 0.0 {
        return Err(Error::Engine("both confidences are zero".into()));
    }
    Ok((c_sym * lambda_sym + c_neu * lambda_neu) / total)
}

/// Reciprocal confidence rule: c = 1 / (u + eps), monotone decreasing in u.
pub fn default_confidence(u_sym: f64, u_neu: f64, epsilon: f64) -> Result<(f64, f64)> {
    if u_sym < 0.0 || u_neu < 0.0 {
        return Err(Error::Engine(format!("negative uncertainty ({u_sym}, {u_neu})")));
    }
    Ok((1.0 / (u_sym + epsilon), 1.0 / (u_neu + epsilon)))
}

/// Applies a fusion mode to one transition's pathway estimates.
pub fn fuse_with_mode(
    mode: FusionMode,
    lambda_sym: f64,
    u_sym: f64,
    lambda_neu: f64,
    u_neu: f64,
    calibrator: Option<(&ConfidenceCalibrator, &CalibratorFeatures)>,
) -> Result<FusedHazard> {
    let (c_sym, c_neu) = match mode {
        FusionMode::DefaultReciprocal => default_confidence(u_sym, u_neu, CONFIDENCE_EPSILON)?,
        FusionMode::NaiveMean => (1.0, 1.0),
        FusionMode::SymbolicOnly => (1.0, 0.0),
        FusionMode::NeuralOnly => (0.0, 1.0),
        FusionMode::LearnedCalibrator => match calibrator {
            Some((cal, feats)) => cal.confidences(feats),
            None => return Err(Error::Engine("calibrator mode without a calibrator".into())),
        },
    };
    let lambda_fused = fuse(lambda_sym, c_sym, lambda_neu, c_neu)?;
    Ok(FusedHazard {
        lambda_fused,
        lambda_sym,
        u_sym,
        c_sym,
        lambda_neu,
        u_neu,
        c_neu,
        mode,
    })
}

/// Context features consumed by the calibrator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibratorFeatures {
    pub u_sym: f64,
    pub u_neu: f64,
    pub phi_entropy: f64,
    pub exo_change: f64,
}

impl CalibratorFeatures {
    fn as_vec(&self) -> [f64; 4] {
        [self.u_sym, self.u_neu, self.phi_entropy, self.exo_change]
    }
}

/// One historical record for calibrator training.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibratorRecord {
    pub features: CalibratorFeatures,
    pub lambda_sym: f64,
    pub lambda_neu: f64,
    pub realized_rate: f64,
}

/// Small feed-forward map from context features to strictly positive
/// (c_sym, c_neu) via softplus outputs. Trained to minimize the MSE between
/// the fused one-step forecast and the realized cluster rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfidenceCalibrator {
    hidden: usize,
    /// Layout: W1 (hidden x 4), b1, W2 (2 x hidden), b2.
    params: Vec<f64>,
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        (1.0 + x.exp()).ln()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibratorHyper {
    pub hidden: usize,
    pub epochs: usize,
    pub step_size: f64,
}

impl Default for CalibratorHyper {
    fn default() -> Self {
        Self {
            hidden: 8,
            epochs: 8000,
            step_size: 0.25,
        }
    }
}

impl ConfidenceCalibrator {
    pub fn init(hidden: usize, seed: u64) -> Self {
        let mut rng = Stream::keyed(seed, "calibrator-init", &[hidden as u64]);
        let count = hidden * 4 + hidden + 2 * hidden + 2;
        let params = (0..count).map(|_| rng.normal() * 0.5).collect();
        Self { hidden, params }
    }

    fn forward(&self, x: &[f64; 4]) -> (f64, f64, Vec<f64>, [f64; 2]) {
        let h = self.hidden;
        let (w1, b1, w2, b2) = (0, h * 4, h * 4 + h, h * 4 + h + 2 * h);
        let mut a1 = vec![0.0; h];
        for r in 0..h {
            let mut z = self.params[b1 + r];
            for c in 0..4 {
                z += self.params[w1 + r * 4 + c] * x[c];
            }
            a1[r] = z.tanh();
        }
        let mut z2 = [0.0; 2];
        for o in 0..2 {
            let mut z = self.params[b2 + o];
            for c in 0..h {
                z += self.params[w2 + o * h + c] * a1[c];
            }
            z2[o] = z;
        }
        (softplus(z2[0]), softplus(z2[1]), a1, z2)
    }

    /// Strictly positive confidence pair for a feature vector.
    pub fn confidences(&self, feats: &CalibratorFeatures) -> (f64, f64) {
        let (cs, cn, _, _) = self.forward(&feats.as_vec());
        (cs.max(1e-12), cn.max(1e-12))
    }

    /// Mean squared error between fused forecasts and realized rates, plus
    /// its gradient over the flat parameter vector.
    pub fn loss_and_grad(&self, records: &[CalibratorRecord]) -> Result<(f64, Vec<f64>)> {
        let h = self.hidden;
        let (w1, b1, w2, b2) = (0, h * 4, h * 4 + h, h * 4 + h + 2 * h);
        let n = records.len() as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        for rec in records {
            let x = rec.features.as_vec();
            let (cs, cn, a1, z2) = self.forward(&x);
            let total = cs + cn;
            let fused = (cs * rec.lambda_sym + cn * rec.lambda_neu) / total;
            let err = fused - rec.realized_rate;
            loss += err * err / n;
            // d loss / d fused
            let dfused = 2.0 * err / n;
            // d fused / d c
            let dcs = (rec.lambda_sym - fused) / total;
            let dcn = (rec.lambda_neu - fused) / total;
            // softplus' = sigmoid
            let dz = [dfused * dcs * sigmoid(z2[0]), dfused * dcn * sigmoid(z2[1])];
            let mut d1 = vec![0.0; h];
            for o in 0..2 {
                for c in 0..h {
                    grad[w2 + o * h + c] += dz[o] * a1[c];
                    d1[c] += dz[o] * self.params[w2 + o * h + c];
                }
                grad[b2 + o] += dz[o];
            }
            for r in 0..h {
                let dt = d1[r] * (1.0 - a1[r] * a1[r]);
                for c in 0..4 {
                    grad[w1 + r * 4 + c] += dt * x[c];
                }
                grad[b1 + r] += dt;
            }
        }
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch: 0,
                detail: "calibrator loss".into(),
            });
        }
        Ok((loss, grad))
    }
}

/// Trains the calibrator by full-batch gradient descent; deterministic per
/// seed. Requires at least 16 records.
pub fn train_calibrator(
    records: &[CalibratorRecord],
    hyper: &CalibratorHyper,
    seed: u64,
) -> Result<(ConfidenceCalibrator, Vec<f64>)> {
    if records.len() < 16 {
        return Err(Error::Engine(format!(
            "need >= 16 calibrator records, got {}",
            records.len()
        )));
    }
    let mut cal = ConfidenceCalibrator::init(hyper.hidden, seed);
    let mut trace = Vec::with_capacity(hyper.epochs);
    for epoch in 0..hyper.epochs {
        let (loss, grad) = cal.loss_and_grad(records).map_err(|e| match e {
            Error::NonFiniteLoss { detail, .. } => Error::NonFiniteLoss { epoch, detail },
            other => other,
        })?;
        trace.push(loss);
        for (p, g) in cal.params.iter_mut().zip(&grad) {
            *p -= hyper.step_size * g;
        }
    }
    Ok((cal, trace))
}
