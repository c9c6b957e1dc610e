//! Agent profiles, exogenous signals, and scenario configuration.

use crate::error::{Error, Result};
use crate::model::state::StateSpace;
use crate::rng::Stream;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Static per-agent attributes and per-transition susceptibility multipliers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentProfile {
    pub id: usize,
    pub attributes: BTreeMap<String, f64>,
    /// Keyed by (from, to) state indices; missing entries default to 1.
    pub susceptibility: BTreeMap<(usize, usize), f64>,
}

impl AgentProfile {
    pub fn attribute(&self, name: &str) -> f64 {
        self.attributes.get(name).copied().unwrap_or(0.0)
    }

    pub fn modifier(&self, from: usize, to: usize) -> f64 {
        self.susceptibility.get(&(from, to)).copied().unwrap_or(1.0)
    }

    /// True when every susceptibility modifier is exactly zero (the
    /// null-responder rule for diagnostic probes).
    pub fn is_null_responder(&self) -> bool {
        !self.susceptibility.is_empty() && self.susceptibility.values().all(|&m| m == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (k, v) in &self.attributes {
            if !v.is_finite() {
                return Err(Error::InvalidScenario(format!(
                    "agent {} attribute {k} is not finite",
                    self.id
                )));
            }
        }
        for ((f, t), v) in &self.susceptibility {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::InvalidScenario(format!(
                    "agent {} modifier for ({f}, {t}) invalid: {v}",
                    self.id
                )));
            }
        }
        Ok(())
    }
}

/// Validates that profile ids are unique and dense in [0, n).
pub fn validate_profiles(profiles: &[AgentProfile]) -> Result<()> {
    let n = profiles.len();
    let mut seen = vec![false; n];
    for p in profiles {
        if p.id >= n || seen[p.id] {
            return Err(Error::InvalidScenario(format!(
                "profile ids must be unique and dense in [0, {n}); offending id {}",
                p.id
            )));
        }
        seen[p.id] = true;
        p.validate()?;
    }
    Ok(())
}

/// One named daily scalar signal over the scenario span.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExogenousSeries {
    pub name: String,
    pub values: Vec<f64>,
    pub units: String,
}

impl ExogenousSeries {
    pub fn validate(&self, span: usize) -> Result<()> {
        if self.values.len() != span {
            return Err(Error::InvalidScenario(format!(
                "series {} has {} values, scenario span is {span}",
                self.name,
                self.values.len()
            )));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "series {} contains non-finite value {v}",
                self.name
            )));
        }
        Ok(())
    }
}

/// Scenario-level configuration: the state machine, horizon, initial counts,
/// exogenous signals, and (for synthetic scenarios) the true per-day hazards
/// the generator used.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub domain: String,
    pub state_space: StateSpace,
    /// Scenario span in days.
    pub horizon: usize,
    /// state index -> initial agent count.
    pub initial_counts: BTreeMap<usize, usize>,
    pub exogenous: Vec<ExogenousSeries>,
    pub seed: u64,
    /// True per-transition per-day hazards, present for synthetic scenarios
    /// only. Outer index: day; inner map keyed by (from, to).
    pub generator_hazards: Option<Vec<BTreeMap<(usize, usize), f64>>>,
}

impl ScenarioConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        let total: usize = self.initial_counts.values().sum();
        if total != n {
            return Err(Error::InvalidScenario(format!(
                "initial counts sum to {total}, expected n = {n}"
            )));
        }
        for &s in self.initial_counts.keys() {
            if s >= self.state_space.n_states() {
                return Err(Error::InvalidScenario(format!("initial count for unknown state {s}")));
            }
        }
        for series in &self.exogenous {
            series.validate(self.horizon)?;
        }
        if let Some(hz) = &self.generator_hazards {
            if hz.len() != self.horizon {
                return Err(Error::InvalidScenario(format!(
                    "generator hazards cover {} days, span is {}",
                    hz.len(),
                    self.horizon
                )));
            }
            for (day, per_day) in hz.iter().enumerate() {
                for (&(f, t), &v) in per_day {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::InvalidScenario(format!(
                            "generator hazard ({f}, {t}) on day {day} is {v}, outside [0, 1]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn series(&self, name: &str) -> Option<&ExogenousSeries> {
        self.exogenous.iter().find(|s| s.name == name)
    }
}

/// Seeded initial state assignment: exact multiplicities from
/// `initial_counts`, placed by a uniform seeded permutation.
pub fn initialize_states(config: &ScenarioConfig, n: usize, seed: u64) -> Result<Vec<usize>> {
    config.validate(n)?;
    let mut states = Vec::with_capacity(n);
    for (&state, &count) in &config.initial_counts {
        states.extend(std::iter::repeat(state).take(count));
    }
    let mut rng = Stream::keyed(seed, "initial-states", &[n as u64]);
    rng.shuffle(&mut states);
    Ok(states)
}

/// Initial counts for a 1% (ceiling) minority-state initialization: every
/// agent starts in `majority` except ceil(fraction * n) seeds in `minority`.
pub fn minority_counts(
    n: usize,
    majority: usize,
    minority: usize,
    fraction: f64,
) -> BTreeMap<usize, usize> {
    let seeds = ((fraction * n as f64).ceil() as usize).min(n);
    let mut counts = BTreeMap::new();
    counts.insert(majority, n - seeds);
    counts.insert(minority, seeds);
    counts
}
