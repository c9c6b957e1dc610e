//! Pluggable behavior backend: diagnostic probe responses and anchor
//! compatibility judgments, with a deterministic rule oracle as the default.

use crate::error::Result;
use crate::model::AgentProfile;
use serde::{Deserialize, Serialize};

/// One diagnostic context probe: a named situation with per-dimension
/// intensity overrides aligned with the backend's response dimensions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContextProbe {
    pub name: String,
    pub intensity: Vec<f64>,
}

/// Answers diagnostic probes and anchor-agent compatibility queries. The
/// oracle implementation is deterministic; a remote implementation may defer
/// to an LLM service and fall back to the oracle on schema failure.
pub trait BehaviorBackend {
    /// Response dimension names, fixed per backend.
    fn dims(&self) -> &[String];

    /// Fixed-width response vector in [-1, 1] per dimension.
    fn probe_response(&self, profile: &AgentProfile, probe: &ContextProbe) -> Result<Vec<f64>>;

    /// Soft regime-compatibility judgment in [0, 1] for an (anchor, agent)
    /// motif-profile pair.
    fn judge(&self, anchor_profile: &[f64], agent_profile: &[f64]) -> Result<f64>;
}

/// One behavioral response dimension, linked to exactly one agent attribute.
/// Linking each dimension to a single attribute keeps the rule table
/// inspectable: agents differing in one attribute differ only in that
/// dimension's responses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BehaviorDim {
    pub name: String,
    pub attribute: String,
    pub weight: f64,
}

/// Deterministic rule-table backend. Response per dimension:
/// clamp(weight * attribute * probe intensity, -1, 1), gated to zero for
/// null responders (agents whose susceptibility modifiers are all zero).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleBehavior {
    pub dims: Vec<BehaviorDim>,
    dim_names: Vec<String>,
}

/// Steepness of the oracle's judgment curve: perfectly aligned profiles score
/// logistic(4) ~ 0.982.
pub const JUDGMENT_KAPPA: f64 = 4.0;

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

impl OracleBehavior {
    pub fn new(dims: Vec<BehaviorDim>) -> Self {
        let dim_names = dims.iter().map(|d| d.name.clone()).collect();
        Self { dims, dim_names }
    }

    /// Default epidemiology-flavored dimensions: contact reduction, isolation
    /// intensity, and compliance, each tied to one attribute.
    pub fn default_epi() -> Self {
        Self::new(vec![
            BehaviorDim {
                name: "contact_reduction".into(),
                attribute: "risk_aversion".into(),
                weight: 1.0,
            },
            BehaviorDim {
                name: "isolation_intensity".into(),
                attribute: "caution".into(),
                weight: 1.0,
            },
            BehaviorDim {
                name: "compliance".into(),
                attribute: "compliance".into(),
                weight: 1.0,
            },
        ])
    }
}

impl BehaviorBackend for OracleBehavior {
    fn dims(&self) -> &[String] {
        &self.dim_names
    }

    fn probe_response(&self, profile: &AgentProfile, probe: &ContextProbe) -> Result<Vec<f64>> {
        let gate = if profile.is_null_responder() { 0.0 } else { 1.0 };
        Ok(self
            .dims
            .iter()
            .enumerate()
            .map(|(d, dim)| {
                let intensity = probe.intensity.get(d).copied().unwrap_or(0.0);
                (dim.weight * profile.attribute(&dim.attribute) * intensity * gate).clamp(-1.0, 1.0)
            })
            .collect())
    }

    fn judge(&self, anchor_profile: &[f64], agent_profile: &[f64]) -> Result<f64> {
        Ok(logistic(JUDGMENT_KAPPA * cosine(anchor_profile, agent_profile)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn profile(attrs: &[(&str, f64)], mods: &[((usize, usize), f64)]) -> AgentProfile {
        AgentProfile {
            id: 0,
            attributes: attrs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            susceptibility: mods.iter().copied().collect(),
        }
    }

    fn probe(intensity: &[f64]) -> ContextProbe {
        ContextProbe {
            name: "p".into(),
            intensity: intensity.to_vec(),
        }
    }

    #[test]
    fn null_responder_gives_zero_vector() {
        let backend = OracleBehavior::default_epi();
        let p = profile(&[("risk_aversion", 0.9), ("compliance", 0.9)], &[((0, 1), 0.0)]);
        let r = backend.probe_response(&p, &probe(&[1.0, 1.0, 1.0])).unwrap();
        assert!(r.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn responses_are_deterministic() {
        let backend = OracleBehavior::default_epi();
        let p = profile(&[("risk_aversion", 0.4), ("caution", 0.2), ("compliance", 0.7)], &[]);
        let a = backend.probe_response(&p, &probe(&[0.5, 0.5, 0.5])).unwrap();
        let b = backend.probe_response(&p, &probe(&[0.5, 0.5, 0.5])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn attribute_changes_touch_only_linked_dimensions() {
        let backend = OracleBehavior::default_epi();
        let a = profile(&[("risk_aversion", 0.4), ("caution", 0.2), ("compliance", 0.3)], &[]);
        let b = profile(&[("risk_aversion", 0.4), ("caution", 0.2), ("compliance", 0.9)], &[]);
        let pr = probe(&[0.8, 0.8, 0.8]);
        let ra = backend.probe_response(&a, &pr).unwrap();
        let rb = backend.probe_response(&b, &pr).unwrap();
        assert_eq!(ra[0], rb[0]);
        assert_eq!(ra[1], rb[1]);
        assert_ne!(ra[2], rb[2]);
    }

    #[test]
    fn judgment_values_on_aligned_orthogonal_antialigned() {
        let backend = OracleBehavior::default_epi();
        let q_same = backend.judge(&[1.0, 0.0], &[2.0, 0.0]).unwrap();
        let q_orth = backend.judge(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let q_anti = backend.judge(&[1.0, 0.0], &[-1.0, 0.0]).unwrap();
        assert!((q_same - logistic(4.0)).abs() < 1e-12);
        assert!((q_same - 0.98201).abs() < 1e-4);
        assert!((q_orth - 0.5).abs() < 1e-12);
        assert!((q_anti - logistic(-4.0)).abs() < 1e-12);
        assert!((q_anti - 0.01799).abs() < 1e-4);
    }

    #[test]
    fn empty_modifier_map_is_not_null_responder() {
        let p = profile(&[("risk_aversion", 1.0)], &[]);
        assert!(!p.is_null_responder());
        let backend = OracleBehavior::default_epi();
        let r = backend.probe_response(&p, &probe(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(r[0], 1.0);
    }
}
