//! Deterministic mechanistic rule tables: the offline stand-in for the
//! remote agent team, and the generator behind synthetic scenarios.

use crate::error::{Error, Result};
use crate::model::StateSpace;
use crate::symbolic::context::ClusterContext;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Closed-form hazard of one rule, before any policy multiplier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum HazardForm {
    /// base * (fraction of infectious states in phi); the contact-driven form.
    ContactPressure { base: f64 },
    /// 1 / days; fixed-duration progression.
    Reciprocal { days: f64 },
    /// Constant per-day probability.
    Constant { rate: f64 },
    /// base * max(0, offset + coef * value(series)); exogenous-signal-scaled
    /// form. offset = 1 scales around the base; offset = 0 gates the hazard
    /// fully on the signal.
    SignalScaled {
        base: f64,
        series: String,
        coef: f64,
        offset: f64,
    },
}

/// Multiplies a rule's hazard by 1 + (multiplier_at_one - 1) * v, where v is
/// the named series' current value clamped to [0, 1]. A step series switching
/// 0 -> 1 scales the hazard from 1x down (or up) to `multiplier_at_one`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyEffect {
    pub series: String,
    pub multiplier_at_one: f64,
}

pub const DEFAULT_MECHANISTIC_UNCERTAINTY: f64 = 0.05;
pub const DEFAULT_REGIME_UNCERTAINTY: f64 = 0.25;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HazardRule {
    pub from: usize,
    pub to: usize,
    pub form: HazardForm,
    pub policy: Option<PolicyEffect>,
    /// Fixed confidence width reported with every estimate from this rule.
    pub uncertainty: f64,
}

impl HazardRule {
    /// Default uncertainty: regime-dependent rules (policy multiplier or
    /// signal-scaled) are wider than purely mechanistic ones.
    pub fn with_default_uncertainty(from: usize, to: usize, form: HazardForm, policy: Option<PolicyEffect>) -> Self {
        let regime_dependent = policy.is_some() || matches!(form, HazardForm::SignalScaled { .. });
        let uncertainty = if regime_dependent {
            DEFAULT_REGIME_UNCERTAINTY
        } else {
            DEFAULT_MECHANISTIC_UNCERTAINTY
        };
        Self { from, to, form, policy, uncertainty }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RuleTable {
    pub rules: Vec<HazardRule>,
}

/// One per-transition estimate with its confidence width and bookkeeping
/// flags (clamped out-of-range value, oracle fallback under the remote
/// backend).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HazardEntry {
    pub hazard: f64,
    pub uncertainty: f64,
    pub rationale: String,
    pub clamped: bool,
    pub fallback: bool,
}

/// Per-cluster symbolic hazard estimate: one entry per admissible transition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymbolicHazardEstimate {
    pub cluster_id: usize,
    pub t: usize,
    pub entries: BTreeMap<(usize, usize), HazardEntry>,
}

impl SymbolicHazardEstimate {
    pub fn hazard(&self, from: usize, to: usize) -> Option<&HazardEntry> {
        self.entries.get(&(from, to))
    }

    pub fn any_fallback(&self) -> bool {
        self.entries.values().any(|e| e.fallback)
    }

    pub fn any_clamped(&self) -> bool {
        self.entries.values().any(|e| e.clamped)
    }
}

impl RuleTable {
    pub fn rule(&self, from: usize, to: usize) -> Option<&HazardRule> {
        self.rules.iter().find(|r| r.from == from && r.to == to)
    }

    /// Evaluates one rule against a cluster context. Pure; identical contexts
    /// yield identical hazards.
    pub fn evaluate_rule(
        &self,
        rule: &HazardRule,
        context: &ClusterContext,
        space: &StateSpace,
    ) -> Result<(f64, String)> {
        let (raw, mut why) = match &rule.form {
            HazardForm::ContactPressure { base } => {
                let frac = context.infectious_fraction(|s| space.is_infectious(s));
                (base * frac, format!("contact pressure {base} * infectious fraction {frac:.4}"))
            }
            HazardForm::Reciprocal { days } => {
                (1.0 / days, format!("fixed progression over {days} days"))
            }
            HazardForm::Constant { rate } => (*rate, format!("constant rate {rate}")),
            HazardForm::SignalScaled { base, series, coef, offset } => {
                let v = context.exo_value(series).ok_or_else(|| {
                    Error::Engine(format!("rule references unknown series {series}"))
                })?;
                let scale = (offset + coef * v).max(0.0);
                (base * scale, format!("signal {series}={v:.4} scales base {base} by {scale:.4}"))
            }
        };
        let mut value = raw;
        if let Some(policy) = &rule.policy {
            let v = context
                .exo_value(&policy.series)
                .ok_or_else(|| Error::Engine(format!("rule references unknown series {}", policy.series)))?
                .clamp(0.0, 1.0);
            let mult = 1.0 + (policy.multiplier_at_one - 1.0) * v;
            value *= mult;
            why.push_str(&format!("; policy {}={v:.3} multiplier {mult:.4}", policy.series));
        }
        Ok((value.clamp(0.0, 1.0), why))
    }

    /// Per-day hazards for every admissible transition under this rule table.
    /// Errors when any transition lacks a rule.
    pub fn oracle_hazards(
        &self,
        context: &ClusterContext,
        space: &StateSpace,
    ) -> Result<SymbolicHazardEstimate> {
        let mut entries = BTreeMap::new();
        for t in space.transitions() {
            let rule = self
                .rule(t.from, t.to)
                .ok_or_else(|| Error::MissingRule(space.transition_key(t)))?;
            let (hazard, rationale) = self.evaluate_rule(rule, context, space)?;
            entries.insert(
                (t.from, t.to),
                HazardEntry {
                    hazard,
                    uncertainty: rule.uncertainty,
                    rationale,
                    clamped: false,
                    fallback: false,
                },
            );
        }
        Ok(SymbolicHazardEstimate {
            cluster_id: context.cluster_id,
            t: context.t,
            entries,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::context::{ClusterContext, ExoSnapshot, NeighborSummary};

    fn ctx(phi: Vec<f64>, exo: Vec<(&str, f64)>) -> ClusterContext {
        ClusterContext {
            cluster_id: 0,
            t: 0,
            size: 10,
            phi,
            psi: exo
                .into_iter()
                .map(|(name, value)| ExoSnapshot {
                    name: name.into(),
                    value,
                    trailing_mean: value,
                })
                .collect(),
            psi_nbr: NeighborSummary {
                mean_phi: vec![],
                inter_cluster_edge_fraction: 0.0,
            },
        }
    }

    fn seird_rules() -> RuleTable {
        RuleTable {
            rules: vec![
                HazardRule {
                    from: 0,
                    to: 1,
                    form: HazardForm::ContactPressure { base: 0.8 },
                    policy: Some(PolicyEffect {
                        series: "stringency".into(),
                        multiplier_at_one: 0.2,
                    }),
                    uncertainty: 0.25,
                },
                HazardRule {
                    from: 1,
                    to: 2,
                    form: HazardForm::Reciprocal { days: 5.0 },
                    policy: None,
                    uncertainty: 0.05,
                },
                HazardRule {
                    from: 2,
                    to: 3,
                    form: HazardForm::Reciprocal { days: 10.0 },
                    policy: None,
                    uncertainty: 0.05,
                },
                HazardRule {
                    from: 2,
                    to: 4,
                    form: HazardForm::Constant { rate: 0.02 },
                    policy: None,
                    uncertainty: 0.05,
                },
            ],
        }
    }

    #[test]
    fn zero_infected_fraction_gives_zero_exposure() {
        let space = StateSpace::seird();
        let est = seird_rules()
            .oracle_hazards(&ctx(vec![1.0, 0.0, 0.0, 0.0, 0.0], vec![("stringency", 0.0)]), &space)
            .unwrap();
        assert_eq!(est.hazard(0, 1).unwrap().hazard, 0.0);
    }

    #[test]
    fn reciprocal_rule_arithmetic() {
        // incubation_days = 5 -> lambda = 0.2
        let space = StateSpace::seird();
        let est = seird_rules()
            .oracle_hazards(&ctx(vec![0.5, 0.3, 0.2, 0.0, 0.0], vec![("stringency", 0.0)]), &space)
            .unwrap();
        assert!((est.hazard(1, 2).unwrap().hazard - 0.2).abs() < 1e-12);
    }

    #[test]
    fn policy_multiplier_scales_contact_rule() {
        let space = StateSpace::seird();
        let table = seird_rules();
        let pre = table
            .oracle_hazards(&ctx(vec![0.8, 0.0, 0.2, 0.0, 0.0], vec![("stringency", 0.0)]), &space)
            .unwrap();
        let post = table
            .oracle_hazards(&ctx(vec![0.8, 0.0, 0.2, 0.0, 0.0], vec![("stringency", 1.0)]), &space)
            .unwrap();
        let pre_v = pre.hazard(0, 1).unwrap().hazard;
        let post_v = post.hazard(0, 1).unwrap().hazard;
        assert!((pre_v - 0.8 * 0.2).abs() < 1e-12);
        assert!((post_v - pre_v * 0.2).abs() < 1e-12, "5x drop at full stringency");
    }

    #[test]
    fn missing_rule_is_an_error() {
        let space = StateSpace::seird();
        let mut table = seird_rules();
        table.rules.pop();
        let err = table
            .oracle_hazards(&ctx(vec![1.0, 0.0, 0.0, 0.0, 0.0], vec![("stringency", 0.0)]), &space)
            .unwrap_err();
        assert!(err.to_string().contains("I->D"), "{err}");
    }

    #[test]
    fn oracle_is_pure() {
        let space = StateSpace::seird();
        let table = seird_rules();
        let c = ctx(vec![0.7, 0.1, 0.2, 0.0, 0.0], vec![("stringency", 0.3)]);
        let a = table.oracle_hazards(&c, &space).unwrap();
        let b = table.oracle_hazards(&c, &space).unwrap();
        for (k, e) in &a.entries {
            assert_eq!(e.hazard, b.entries[k].hazard);
        }
    }
}
