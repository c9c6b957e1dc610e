//! Small feed-forward network: two tanh hidden layers, one logistic output
//! head per transition, trained by full-batch gradient descent on masked
//! weighted MSE. Parameters live in one flat vector so serialization and
//! finite-difference checks stay trivial.

use crate::error::{Error, Result};
use crate::rng::Stream;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    pub d_in: usize,
    pub hidden: (usize, usize),
    pub n_out: usize,
    /// Layout: W1 (h1 x d_in), b1, W2 (h2 x h1), b2, W3 (n_out x h2), b3.
    pub params: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Mlp {
    pub fn param_count(d_in: usize, hidden: (usize, usize), n_out: usize) -> usize {
        let (h1, h2) = hidden;
        h1 * d_in + h1 + h2 * h1 + h2 + n_out * h2 + n_out
    }

    /// Seeded Gaussian init scaled by 1/sqrt(fan_in); biases start at zero.
    pub fn init(d_in: usize, hidden: (usize, usize), n_out: usize, seed: u64) -> Self {
        Self::init_with_output_bias(d_in, hidden, n_out, seed, &vec![0.0; n_out])
    }

    /// Init with per-head output biases. Starting each logistic head at its
    /// class's pooled-rate logit avoids the flat-gradient crawl toward
    /// saturated targets under MSE.
    pub fn init_with_output_bias(
        d_in: usize,
        hidden: (usize, usize),
        n_out: usize,
        seed: u64,
        output_bias: &[f64],
    ) -> Self {
        let (h1, h2) = hidden;
        let mut rng = Stream::keyed(seed, "mlp-init", &[d_in as u64, h1 as u64, h2 as u64, n_out as u64]);
        let mut params = Vec::with_capacity(Self::param_count(d_in, hidden, n_out));
        let push_layer = |rows: usize, cols: usize, rng: &mut Stream, params: &mut Vec<f64>| {
            let scale = 1.0 / (cols as f64).sqrt();
            for _ in 0..rows * cols {
                params.push(rng.normal() * scale);
            }
            for _ in 0..rows {
                params.push(0.0);
            }
        };
        push_layer(h1, d_in, &mut rng, &mut params);
        push_layer(h2, h1, &mut rng, &mut params);
        push_layer(n_out, h2, &mut rng, &mut params);
        let b3 = params.len() - n_out;
        for (o, b) in output_bias.iter().enumerate() {
            params[b3 + o] = *b;
        }
        Self {
            d_in,
            hidden,
            n_out,
            params,
        }
    }

    fn offsets(&self) -> (usize, usize, usize, usize, usize) {
        let (h1, h2) = self.hidden;
        let w1 = 0;
        let b1 = w1 + h1 * self.d_in;
        let w2 = b1 + h1;
        let b2 = w2 + h2 * h1;
        let w3 = b2 + h2;
        // b3 = w3 + n_out * h2
        (w1, b1, w2, b2, w3)
    }

    /// Forward pass; hidden activations returned for backprop.
    pub fn forward_full(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (h1n, h2n) = self.hidden;
        let (w1, b1, w2, b2, w3) = self.offsets();
        let b3 = w3 + self.n_out * h2n;
        let mut a1 = vec![0.0; h1n];
        for r in 0..h1n {
            let mut z = self.params[b1 + r];
            let row = &self.params[w1 + r * self.d_in..w1 + (r + 1) * self.d_in];
            for (w, v) in row.iter().zip(x) {
                z += w * v;
            }
            a1[r] = z.tanh();
        }
        let mut a2 = vec![0.0; h2n];
        for r in 0..h2n {
            let mut z = self.params[b2 + r];
            let row = &self.params[w2 + r * h1n..w2 + (r + 1) * h1n];
            for (w, v) in row.iter().zip(&a1) {
                z += w * v;
            }
            a2[r] = z.tanh();
        }
        let mut out = vec![0.0; self.n_out];
        for r in 0..self.n_out {
            let mut z = self.params[b3 + r];
            let row = &self.params[w3 + r * h2n..w3 + (r + 1) * h2n];
            for (w, v) in row.iter().zip(&a2) {
                z += w * v;
            }
            out[r] = sigmoid(z);
        }
        (out, a1, a2)
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        self.forward_full(x).0
    }

    /// Masked weighted MSE with an L2 penalty on weight matrices (biases
    /// excluded):
    /// loss = sum_i sum_o w_o m_io (y_io - t_io)^2 / sum_i sum_o w_o m_io
    ///      + penalty * sum(W^2).
    ///
    /// Returns (loss, gradient over the flat parameter vector).
    pub fn loss_and_grad(
        &self,
        xs: &[Vec<f64>],
        targets: &[Vec<f64>],
        masks: &[Vec<bool>],
        class_weights: &[f64],
        penalty: f64,
    ) -> Result<(f64, Vec<f64>)> {
        let (h1n, h2n) = self.hidden;
        let (w1o, b1o, w2o, b2o, w3o) = self.offsets();
        let b3o = w3o + self.n_out * h2n;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let norm: f64 = masks
            .iter()
            .flat_map(|m| {
                m.iter()
                    .enumerate()
                    .filter(|(_, &on)| on)
                    .map(|(o, _)| class_weights[o])
            })
            .sum();
        if norm == 0.0 {
            return Err(Error::Engine("no unmasked targets in batch".into()));
        }
        for ((x, t), m) in xs.iter().zip(targets).zip(masks) {
            let (out, a1, a2) = self.forward_full(x);
            // output deltas (d loss / d z3)
            let mut d3 = vec![0.0; self.n_out];
            for o in 0..self.n_out {
                if !m[o] {
                    continue;
                }
                let err = out[o] - t[o];
                loss += class_weights[o] * err * err / norm;
                d3[o] = 2.0 * class_weights[o] * err * out[o] * (1.0 - out[o]) / norm;
            }
            // backprop to layer 2
            let mut d2 = vec![0.0; h2n];
            for o in 0..self.n_out {
                if d3[o] == 0.0 {
                    continue;
                }
                for c in 0..h2n {
                    grad[w3o + o * h2n + c] += d3[o] * a2[c];
                    d2[c] += d3[o] * self.params[w3o + o * h2n + c];
                }
                grad[b3o + o] += d3[o];
            }
            for c in 0..h2n {
                d2[c] *= 1.0 - a2[c] * a2[c];
            }
            // backprop to layer 1
            let mut d1 = vec![0.0; h1n];
            for r in 0..h2n {
                if d2[r] == 0.0 {
                    continue;
                }
                for c in 0..h1n {
                    grad[w2o + r * h1n + c] += d2[r] * a1[c];
                    d1[c] += d2[r] * self.params[w2o + r * h1n + c];
                }
                grad[b2o + r] += d2[r];
            }
            for c in 0..h1n {
                d1[c] *= 1.0 - a1[c] * a1[c];
            }
            for r in 0..h1n {
                if d1[r] == 0.0 {
                    continue;
                }
                for c in 0..self.d_in {
                    grad[w1o + r * self.d_in + c] += d1[r] * x[c];
                }
                grad[b1o + r] += d1[r];
            }
        }
        if penalty > 0.0 {
            // Weight matrices only: [w1, b1), [w2, b2), [w3, b3).
            let spans = [(w1o, b1o), (w2o, b2o), (w3o, b3o)];
            for (lo, hi) in spans {
                for idx in lo..hi {
                    loss += penalty * self.params[idx] * self.params[idx];
                    grad[idx] += 2.0 * penalty * self.params[idx];
                }
            }
        }
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch: 0,
                detail: "mlp batch loss".into(),
            });
        }
        Ok((loss, grad))
    }

    pub fn gd_step(&mut self, grad: &[f64], step: f64) {
        for (p, g) in self.params.iter_mut().zip(grad) {
            *p -= step * g;
        }
    }
}
